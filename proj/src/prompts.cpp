#include "dreamforge/prompts.hpp"

#include "dreamforge/json_io.hpp"

namespace dreamforge::prompts {

std::string associate(std::string_view class_name) {
    return "#dreamforge:associate v1\n"
           "Category: " + Json(std::string(class_name)).dump() + "\n"
           "List highly related novel class names: objects that commonly appear together with, "
           "or are close relatives of, this category but are different categories. "
           "Reply with a comma-separated list of nouns only.";
}

std::string describe(const std::vector<std::string>& class_names) {
    return "#dreamforge:describe v1\n"
           "Classes: " + Json(class_names).dump() + "\n"
           "Plan a coarse, realistic scene that contains each listed class exactly once. "
           "Describe in one paragraph where every object sits and roughly how large it is.";
}

std::string induce(const std::vector<std::string>& class_names, std::string_view description, int attempt) {
    return "#dreamforge:induce v1\n"
           "Classes: " + Json(class_names).dump() + "\n"
           "Description: " + std::string(description) + "\n"
           "Attempt: " + std::to_string(attempt) + "\n"
           "Convert the description into strict JSON of the form "
           "{\"objects\":[{\"class\":\"<name>\",\"box\":[x,y,w,h]}]} with coordinates normalized to [0,1] "
           "relative to the canvas. Use only the listed classes, one box per class, and keep boxes apart. "
           "Output the JSON only.";
}

std::optional<std::string> task_of(std::string_view prompt) {
    constexpr std::string_view tag = "#dreamforge:";
    if (prompt.substr(0, tag.size()) != tag) return std::nullopt;
    const auto rest = prompt.substr(tag.size());
    const auto end = rest.find_first_of(" \n");
    return std::string(rest.substr(0, end));
}

std::optional<std::string> field(std::string_view prompt, std::string_view key) {
    std::size_t pos = 0;
    while (pos < prompt.size()) {
        auto eol = prompt.find('\n', pos);
        if (eol == std::string_view::npos) eol = prompt.size();
        const auto line = prompt.substr(pos, eol - pos);
        if (line.size() > key.size() + 1 && line.substr(0, key.size()) == key && line[key.size()] == ':') {
            auto value = line.substr(key.size() + 1);
            while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
            return std::string(value);
        }
        pos = eol + 1;
    }
    return std::nullopt;
}

}  // namespace dreamforge::prompts
