#pragma once

// Shared fixtures for the test binaries: random inputs and scratch directories.

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "dreamforge/config.hpp"
#include "dreamforge/dataset.hpp"
#include "dreamforge/rle.hpp"

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    const char* base = std::getenv("DREAMFORGE_TMP");
    std::filesystem::path root = base != nullptr ? base : std::filesystem::temp_directory_path() / "dreamforge_tests";
    auto dir = root / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Grid with a random density, so both sparse and dense masks appear.
inline dreamforge::BitGrid random_grid(std::mt19937_64& rng, int w, int h) {
    dreamforge::BitGrid g(w, h);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double density = u(rng);
    const bool blocky = u(rng) < 0.5;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (blocky) {
                if (((x / 7) + (y / 5)) % 3 == 0 && u(rng) < 0.9) g.set(x, y);
            } else if (u(rng) < density) {
                g.set(x, y);
            }
        }
    }
    return g;
}

/// Object with a random non-empty mask inside a random box of a w x h canvas.
inline dreamforge::ObjectInstance random_object(std::mt19937_64& rng, int w, int h, std::int64_t id,
                                                std::int64_t category) {
    std::uniform_int_distribution<int> bw(1, w), bh(1, h);
    dreamforge::BBox box{0, 0, bw(rng), bh(rng)};
    box.x = std::uniform_int_distribution<int>(0, w - box.w)(rng);
    box.y = std::uniform_int_distribution<int>(0, h - box.h)(rng);
    dreamforge::BitGrid local = random_grid(rng, box.w, box.h);
    local.set(std::uniform_int_distribution<int>(0, box.w - 1)(rng), std::uniform_int_distribution<int>(0, box.h - 1)(rng));
    dreamforge::ObjectInstance o;
    o.object_id = dreamforge::ObjectId{id};
    o.category_id = dreamforge::CategoryId{category};
    o.bbox = box;
    o.mask = dreamforge::rle_encode_in_box(w, h, box, local);
    return o;
}

inline dreamforge::PipelineConfig small_config(const std::filesystem::path& out, int layouts = 20) {
    dreamforge::PipelineConfig c;
    c.output_dir = out;
    c.num_layouts = layouts;
    c.canvas_width = 256;
    c.canvas_height = 256;
    c.min_box_px = 16;
    c.per_class_cap = 2;
    c.real_images = 60;
    return c;
}

}  // namespace testing
