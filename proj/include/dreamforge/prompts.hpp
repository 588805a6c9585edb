#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dreamforge::prompts {

// Versioned prompt templates. The first line of every prompt is a tag of the
// form "#dreamforge:<task> <version>" so providers and audits can tell them apart.

inline constexpr std::string_view kAssociateVersion = "associate/v1";
inline constexpr std::string_view kDescribeVersion = "describe/v1";
inline constexpr std::string_view kInduceVersion = "induce/v1";

/// Per-class association prompt asking for related novel class names.
std::string associate(std::string_view class_name);

/// Coarse layout planning prompt for a set of classes.
std::string describe(const std::vector<std::string>& class_names);

/// Text-to-layout induction prompt. `attempt` > 0 marks a re-prompt after a parse failure.
std::string induce(const std::vector<std::string>& class_names, std::string_view description, int attempt);

/// Task tag of a prompt ("associate", "describe", "induce"), nullopt if untagged.
std::optional<std::string> task_of(std::string_view prompt);

/// Value of a "Key: value" line, nullopt if absent.
std::optional<std::string> field(std::string_view prompt, std::string_view key);

}  // namespace dreamforge::prompts
