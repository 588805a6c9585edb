#include "dreamforge/stub_providers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "dreamforge/errors.hpp"
#include "dreamforge/hashing.hpp"
#include "dreamforge/prompts.hpp"
#include "dreamforge/rle.hpp"

namespace dreamforge {

double HashRng::gaussian() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

const std::map<std::string, std::vector<std::string>>& association_table() {
    static const std::map<std::string, std::vector<std::string>> table{
        {"dog", {"leash", "collar", "kennel", "frisbee", "bone", "corgi", "dalmatian"}},
        {"cat", {"yarn", "scratching post", "litter box", "lynx", "cushion", "fish bowl"}},
        {"sofa", {"throw pillow", "coffee table", "ottoman", "floor lamp", "rug", "armchair"}},
        {"person", {"backpack", "umbrella", "hat", "scarf", "stroller", "wheelchair"}},
        {"car", {"traffic cone", "parking meter", "fire hydrant", "street sign", "minivan", "taxi"}},
        {"bicycle", {"helmet", "bike rack", "tricycle", "scooter", "pump", "unicycle"}},
        {"bird", {"birdhouse", "feeder", "nest", "perch", "parrot", "pigeon"}},
        {"cup", {"saucer", "teapot", "kettle", "coaster", "thermos", "spoon"}},
        {"bottle", {"cork", "corkscrew", "wine glass", "decanter", "flask", "jug"}},
        {"chair", {"stool", "bench", "desk", "footrest", "cushion", "recliner"}},
        {"tree", {"stump", "hedge", "shrub", "bush", "log", "palm"}},
        {"boat", {"paddle", "buoy", "dock", "kayak", "canoe", "life jacket"}},
        {"horse", {"saddle", "bridle", "stable", "pony", "hay bale", "carriage"}},
        {"laptop", {"mouse pad", "webcam", "headphones", "charger", "keyboard", "monitor"}},
        {"pizza", {"pizza cutter", "oven", "cutting board", "pepperoni", "baguette", "calzone"}},
        {"train", {"railway track", "platform", "signal light", "tram", "locomotive", "caboose"}},
    };
    return table;
}

const std::vector<std::string>& noun_pool() {
    static const std::vector<std::string> pool{
        "lamp", "vase", "clock", "mirror", "basket", "bucket", "ladder", "fence", "mailbox", "lantern",
        "candle", "blanket", "curtain", "shelf", "drawer", "barrel", "crate", "kite", "balloon", "flag",
        "statue", "fountain", "bridge", "tent", "hammock", "globe", "telescope", "guitar", "violin", "drum",
        "trophy", "anchor", "wagon", "sled", "skateboard", "surfboard", "snowman", "scarecrow", "windmill", "tractor",
        "broom", "rake", "shovel", "wheelbarrow", "watering can", "flower pot", "picnic basket", "sandcastle",
        "toolbox", "suitcase", "briefcase", "wallet", "camera", "radio", "typewriter", "piano", "harp", "accordion"};
    return pool;
}

const std::vector<std::string>& non_nouns() {
    static const std::vector<std::string> words{"running", "fluffy", "sleeping", "bright", "wooden", "playing"};
    return words;
}

std::string synonym_of(const std::string& name) {
    for (const auto& group : StubEmbedder::synonym_groups()) {
        if (std::find(group.begin(), group.end(), name) != group.end()) {
            for (const auto& g : group) {
                if (g != name) return g;
            }
        }
    }
    return {};
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string complete_associate(const std::string& prompt, std::uint64_t seed) {
    const auto field = prompts::field(prompt, "Category");
    if (!field) return {};
    const std::string cls = canonical_name(Json::parse(*field).get<std::string>());
    HashRng rng(hash_combine(fnv1a(cls), seed));
    std::vector<std::string> out;
    for (const auto& noun : StubLlm::related_pool(cls)) {
        if (rng.uniform() < 0.6) out.push_back(noun);
    }
    const auto& pool = noun_pool();
    for (int i = 0; i < 2; ++i) out.push_back(pool[rng.below(pool.size())]);
    if (rng.uniform() < 0.35) out.push_back(non_nouns()[rng.below(non_nouns().size())]);
    if (rng.uniform() < 0.3) {
        const std::string syn = synonym_of(cls);
        out.push_back(syn.empty() ? cls : syn);
    }
    // Shuffle and perturb surface form to exercise canonicalization.
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
    for (auto& s : out) {
        if (rng.uniform() < 0.2 && !s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        if (rng.uniform() < 0.1) s = " " + s;
    }
    return join(out, ", ");
}

std::vector<std::string> parse_classes(const std::string& prompt) {
    const auto field = prompts::field(prompt, "Classes");
    if (!field) return {};
    return Json::parse(*field).get<std::vector<std::string>>();
}

std::string complete_describe(const std::string& prompt, std::uint64_t seed) {
    static const char* kPlaces[] = {"upper left", "upper right", "center", "lower left", "lower right", "foreground",
                                    "background", "left edge", "right edge"};
    static const char* kSizes[] = {"small", "medium-sized", "large"};
    const auto classes = parse_classes(prompt);
    HashRng rng(hash_combine(fnv1a(prompt), seed));
    std::string out = "A realistic scene";
    for (std::size_t i = 0; i < classes.size(); ++i) {
        out += i == 0 ? " with a " : (i + 1 == classes.size() ? " and a " : ", a ");
        out += std::string(kSizes[rng.below(3)]) + " " + classes[i] + " in the " + kPlaces[rng.below(9)];
    }
    return out + ".";
}

std::string complete_induce(const std::string& prompt, std::uint64_t seed) {
    auto classes = parse_classes(prompt);
    HashRng rng(hash_combine(fnv1a(prompt), seed));
    const double mode = rng.uniform();
    if (mode < 0.12) return "{\"objects\": [{\"class\": ";  // truncated output
    if (mode < 0.16) classes.push_back("unicorn");
    const std::size_t k = std::max<std::size_t>(classes.size(), 1);
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))));
    const std::size_t rows = (k + cols - 1) / cols;
    // Random cell assignment keeps boxes disjoint.
    std::vector<std::size_t> cells(cols * rows);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
    for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[rng.below(i)]);
    Json objects = Json::array();
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const std::size_t cell = cells[i % cells.size()];
        const double cw = 1.0 / static_cast<double>(cols), ch = 1.0 / static_cast<double>(rows);
        const double w = cw * (0.55 + 0.35 * rng.uniform());
        const double h = ch * (0.55 + 0.35 * rng.uniform());
        const double x = static_cast<double>(cell % cols) * cw + (cw - w) * rng.uniform();
        const double y = static_cast<double>(cell / cols) * ch + (ch - h) * rng.uniform();
        objects.push_back(Json{{"class", classes[i]}, {"box", Json::array({x, y, w, h})}});
    }
    return Json{{"objects", objects}}.dump();
}

std::string uri_box(const BBox& b) {
    return std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," + std::to_string(b.h);
}

BBox parse_box(const std::string& s) {
    BBox b;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(s);
    if (!(in >> b.x >> c1 >> b.y >> c2 >> b.w >> c3 >> b.h) || c1 != ',' || c2 != ',' || c3 != ',') {
        throw ProviderError("malformed box in stub uri: " + s, false);
    }
    return b;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

constexpr std::string_view kImagePrefix = "stub://image/";
constexpr std::string_view kConfPrefix = "stub://conf/";

}  // namespace

std::string StubLlm::complete(const std::string& prompt, std::uint64_t seed) {
    const auto task = prompts::task_of(prompt);
    if (task == "associate") return complete_associate(prompt, seed);
    if (task == "describe") return complete_describe(prompt, seed);
    if (task == "induce") return complete_induce(prompt, seed);
    return "stub-" + hex64(hash_combine(fnv1a(prompt), seed));
}

std::vector<std::string> StubLlm::related_pool(const std::string& class_name) {
    const std::string cls = canonical_name(class_name);
    const auto& table = association_table();
    if (auto it = table.find(cls); it != table.end()) return it->second;
    std::vector<std::string> out;
    HashRng rng(fnv1a(cls));
    const auto& pool = noun_pool();
    while (out.size() < 6) {
        const auto& n = pool[rng.below(pool.size())];
        if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
    return out;
}

const std::vector<std::string>& StubLlm::injected_non_nouns() { return non_nouns(); }

int StubCanvas::top_patch_at(int x, int y) const noexcept {
    for (int i = static_cast<int>(patches.size()) - 1; i >= 0; --i) {
        if (patches[static_cast<std::size_t>(i)].box.contains(x, y)) return i;
    }
    return -1;
}

std::array<std::uint8_t, 3> StubCanvas::color_at(int x, int y) const noexcept {
    const int p = top_patch_at(x, y);
    if (p >= 0) return stub_class_color(patches[static_cast<std::size_t>(p)].category_id);
    const std::uint64_t h = mix64(seed);
    return {static_cast<std::uint8_t>(96 + (h & 31)), static_cast<std::uint8_t>(96 + ((h >> 8) & 31)),
            static_cast<std::uint8_t>(96 + ((h >> 16) & 31))};
}

std::array<std::uint8_t, 3> stub_class_color(std::int64_t category_id) noexcept {
    const std::uint64_t h = mix64(static_cast<std::uint64_t>(category_id) ^ 0xc01042ULL);
    return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

std::string stub_image_uri(const StubCanvas& canvas) {
    std::string uri = std::string(kImagePrefix) + std::to_string(canvas.width) + "x" + std::to_string(canvas.height) +
                      "/" + hex64(canvas.seed) + "/";
    if (canvas.patches.empty()) return uri + "none";
    for (std::size_t i = 0; i < canvas.patches.size(); ++i) {
        if (i) uri += "+";
        uri += std::to_string(canvas.patches[i].category_id) + "@" + uri_box(canvas.patches[i].box);
    }
    return uri;
}

StubCanvas parse_stub_image_uri(const std::string& uri) {
    if (uri.rfind(kImagePrefix, 0) != 0) throw ProviderError("not a stub image uri: " + uri, false);
    const auto parts = split(uri.substr(kImagePrefix.size()), '/');
    if (parts.size() != 3) throw ProviderError("malformed stub image uri: " + uri, false);
    StubCanvas c;
    const auto x = parts[0].find('x');
    if (x == std::string::npos) throw ProviderError("malformed stub image size: " + uri, false);
    try {
        c.width = std::stoi(parts[0].substr(0, x));
        c.height = std::stoi(parts[0].substr(x + 1));
        c.seed = std::stoull(parts[1], nullptr, 16);
        if (parts[2] != "none") {
            for (const auto& p : split(parts[2], '+')) {
                const auto at = p.find('@');
                if (at == std::string::npos) throw ProviderError("malformed stub patch: " + p, false);
                c.patches.push_back({std::stoll(p.substr(0, at)), parse_box(p.substr(at + 1))});
            }
        }
    } catch (const std::logic_error&) {
        throw ProviderError("malformed stub image uri: " + uri, false);
    }
    return c;
}

std::vector<std::uint8_t> render_stub_image(const StubCanvas& canvas) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(canvas.width) * canvas.height * 3);
    std::size_t k = 0;
    for (int y = 0; y < canvas.height; ++y) {
        for (int x = 0; x < canvas.width; ++x) {
            const auto c = canvas.color_at(x, y);
            rgb[k++] = c[0];
            rgb[k++] = c[1];
            rgb[k++] = c[2];
        }
    }
    return rgb;
}

GeneratedImage StubImageGenerator::generate(const Layout& layout, std::uint64_t seed) {
    StubCanvas canvas;
    canvas.width = layout.canvas_width;
    canvas.height = layout.canvas_height;
    canvas.seed = hash_combine(seed, fnv1a(layout.layout_id));
    for (const auto& item : layout.items) {
        if (!item.box.fits(canvas.width, canvas.height)) {
            throw ProviderError("layout box outside canvas", false);
        }
        canvas.patches.push_back({item.category_id.value, item.box});
    }
    GeneratedImage out;
    out.image = ImageHandle{stub_image_uri(canvas), canvas.width, canvas.height};
    for (const auto& p : canvas.patches) {
        std::array<double, 3> sum{};
        for (int y = p.box.y; y < p.box.y + p.box.h; ++y) {
            for (int x = p.box.x; x < p.box.x + p.box.w; ++x) {
                const auto c = canvas.color_at(x, y);
                for (int ch = 0; ch < 3; ++ch) sum[static_cast<std::size_t>(ch)] += c[static_cast<std::size_t>(ch)];
            }
        }
        for (auto& v : sum) v /= static_cast<double>(p.box.area());
        out.regions.push_back({p.box, sum});
    }
    return out;
}

std::vector<MaskCandidate> StubMaskGenerator::propose(const ImageHandle& image, const BBox& box) {
    const StubCanvas canvas = parse_stub_image_uri(image.uri);
    if (!box.fits(canvas.width, canvas.height)) throw ProviderError("box outside stub image", false);
    const std::string image_key = hex64(fnv1a(image.uri));
    std::vector<MaskCandidate> out;

    int best = -1;
    double best_iou = 0.0;
    for (std::size_t i = 0; i < canvas.patches.size(); ++i) {
        const double v = iou(canvas.patches[i].box, box);
        if (v > best_iou) {
            best_iou = v;
            best = static_cast<int>(i);
        }
    }
    auto push = [&](const BitGrid& local, int index) {
        Mask m = rle_encode_in_box(canvas.width, canvas.height, box, local);
        const auto area = m.area();
        if (area == 0) return;
        out.push_back({std::move(m),
                       std::string(kConfPrefix) + image_key + "/" + uri_box(box) + "/" + std::to_string(index), area});
    };
    if (best >= 0) {
        BitGrid local(box.w, box.h);
        for (int y = 0; y < box.h; ++y) {
            for (int x = 0; x < box.w; ++x) {
                if (canvas.top_patch_at(box.x + x, box.y + y) == best) local.set(x, y);
            }
        }
        push(local, 0);
    }
    const int dw = std::max(1, box.w / 2), dh = std::max(1, box.h / 2);
    const int ox = (box.w - dw) / 2, oy = (box.h - dh) / 2;
    BitGrid distractor(box.w, box.h);
    for (int y = oy; y < oy + dh; ++y) {
        for (int x = ox; x < ox + dw; ++x) distractor.set(x, y);
    }
    push(distractor, 1);
    return out;
}

ConfidenceMap StubMaskGenerator::fetch_confidence(const std::string& confidence_uri) {
    if (confidence_uri.rfind(kConfPrefix, 0) != 0) {
        throw ProviderError("not a stub confidence uri: " + confidence_uri, false);
    }
    const auto parts = split(confidence_uri.substr(kConfPrefix.size()), '/');
    if (parts.size() != 3) throw ProviderError("malformed stub confidence uri: " + confidence_uri, false);
    const BBox box = parse_box(parts[1]);
    if (!box.well_formed()) throw ProviderError("malformed stub confidence box", false);
    const std::uint64_t key = fnv1a(confidence_uri);
    // Object-level confidence in [0.6, 0.98) with +-0.05 per-pixel jitter.
    const double level = 0.6 + 0.38 * unit_interval(mix64(key));
    ConfidenceMap map{box.w, box.h, std::vector<double>(static_cast<std::size_t>(box.area()))};
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double jitter = 0.1 * (unit_interval(hash_combine(key, i)) - 0.5);
        map.values[i] = std::clamp(level + jitter, 0.0, 1.0);
    }
    return map;
}

double StubScorer::score(const ImageHandle& image, const BBox& box, const std::string& class_name) {
    std::uint64_t h = fnv1a(image.uri);
    h = hash_combine(h, fnv1a(uri_box(box)));
    h = hash_combine(h, fnv1a(canonical_name(class_name)));
    return unit_interval(h);
}

const std::vector<std::vector<std::string>>& StubEmbedder::synonym_groups() {
    static const std::vector<std::vector<std::string>> groups{
        {"sofa", "couch", "settee"}, {"cup", "mug"},          {"car", "automobile"},   {"tv", "television"},
        {"bicycle", "bike"},         {"dog", "puppy"},        {"cat", "kitten"},       {"person", "human"},
        {"airplane", "aeroplane", "plane"}, {"motorcycle", "motorbike"}, {"bottle", "flask"}};
    return groups;
}

std::vector<double> StubEmbedder::embed(const std::string& text) {
    const std::string name = canonical_name(text);
    if (name.empty()) throw ProviderError("embed: empty text", false);
    std::string key = name;
    bool grouped = false;
    for (const auto& g : synonym_groups()) {
        if (std::find(g.begin(), g.end(), name) != g.end()) {
            key = g.front();
            grouped = true;
            break;
        }
    }
    auto direction = [&](std::uint64_t s) {
        HashRng rng(s);
        std::vector<double> v(dimension_);
        double n2 = 0.0;
        for (auto& x : v) {
            x = rng.gaussian();
            n2 += x * x;
        }
        const double n = std::sqrt(n2);
        for (auto& x : v) x /= n;
        return v;
    };
    std::vector<double> base = direction(hash_combine(seed_, fnv1a(key)));
    if (!grouped || key == name) return base;
    // Perpendicular offset of norm 0.1: cos(member, member) >= (1 - 0.01) / (1 + 0.01).
    std::vector<double> u = direction(hash_combine(seed_ ^ 0x5eed, fnv1a(name)));
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * base[i];
    double n2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] -= dot * base[i];
        n2 += u[i] * u[i];
    }
    const double un = std::sqrt(n2);
    std::vector<double> v(dimension_);
    double vn2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = base[i] + 0.1 * u[i] / un;
        vn2 += v[i] * v[i];
    }
    const double vn = std::sqrt(vn2);
    for (auto& x : v) x /= vn;
    return v;
}

ProviderSet make_stub_providers(std::uint64_t embed_seed) {
    ProviderSet set;
    set.llm = std::make_shared<StubLlm>();
    set.images = std::make_shared<StubImageGenerator>();
    set.masks = std::make_shared<StubMaskGenerator>();
    set.scorer = std::make_shared<StubScorer>();
    set.embedder = std::make_shared<StubEmbedder>(embed_seed);
    return set;
}

}  // namespace dreamforge
