#include "mmlatent/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mmlatent/errors.hpp"
#include "mmlatent/prng.hpp"

namespace mmlatent {

namespace fs = std::filesystem;
using nlohmann::json;

const char* family_name(QuestionFamily f) {
    switch (f) {
        case QuestionFamily::counting: return "counting";
        case QuestionFamily::existence: return "existence";
        case QuestionFamily::majority: return "majority";
    }
    throw ContractError("bad family");
}

namespace {

QuestionFamily family_from_name(const std::string& s) {
    if (s == "counting") return QuestionFamily::counting;
    if (s == "existence") return QuestionFamily::existence;
    if (s == "majority") return QuestionFamily::majority;
    throw DataError("unknown question family '" + s + "'");
}

constexpr const char* kImageContext = "the image shows a grid of colored shapes.";

struct TypeId {
    ColorKind color;
    ShapeKind shape;
};

TypeId type_from_index(int idx) {
    return {static_cast<ColorKind>(idx / kNumShapes), static_cast<ShapeKind>(idx % kNumShapes)};
}

int type_index(ColorKind c, ShapeKind s) {
    return static_cast<int>(c) * kNumShapes + static_cast<int>(s);
}

std::string type_text(const TypeId& t, bool plural) {
    return std::string(color_name(t.color)) + " " + (plural ? shape_plural(t.shape)
                                                            : shape_name(t.shape));
}

std::vector<int> shuffled_cells(Prng& rng, int grid) {
    std::vector<int> order(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    return order;
}

void place(SceneSpec& scene, int cell, const TypeId& t) {
    auto& c = scene.cells[static_cast<std::size_t>(cell)];
    c.occupied = true;
    c.color = t.color;
    c.shape = t.shape;
}

std::string count_word(int n) { return std::to_string(n); }

/// Gold position chosen uniformly; the other three slots take the remaining
/// values of a shuffled pool.
template <typename T>
std::vector<T> arrange_options(Prng& rng, const T& gold, std::vector<T> distractors,
                               int* gold_pos) {
    rng.shuffle(distractors);
    const int pos = static_cast<int>(rng.uniform_int(0, 3));
    std::vector<T> options;
    std::size_t d = 0;
    for (int i = 0; i < 4; ++i) {
        if (i == pos)
            options.push_back(gold);
        else
            options.push_back(distractors[d++]);
    }
    *gold_pos = pos;
    return options;
}

QASample gen_counting_image(Prng& rng) {
    QASample s;
    s.family = QuestionFamily::counting;
    s.has_image = true;

    const int target_count = static_cast<int>(rng.uniform_int(0, 3));
    const TypeId target = type_from_index(static_cast<int>(rng.uniform_int(0, 11)));

    auto scene = SceneSpec::empty();
    auto order = shuffled_cells(rng, scene.grid);
    std::size_t cursor = 0;
    for (int i = 0; i < target_count; ++i) place(scene, order[cursor++], target);
    // fill some remaining cells with other types, never the target type
    while (cursor < order.size()) {
        if (rng.uniform() < 0.45) {
            TypeId t = target;
            while (type_index(t.color, t.shape) == type_index(target.color, target.shape))
                t = type_from_index(static_cast<int>(rng.uniform_int(0, 11)));
            place(scene, order[cursor], t);
        }
        ++cursor;
    }

    s.scene = scene;
    s.context = kImageContext;
    s.question = "how many " + type_text(target, true) + " are there?";
    std::vector<std::string> pool;
    for (int v = 0; v <= 3; ++v)
        if (v != target_count) pool.push_back(count_word(v));
    s.options = arrange_options(rng, count_word(target_count), pool, &s.answer_index);
    const std::string tag = option_tag(s.answer_index);
    s.rationale = "there are " + count_word(target_count) + " " + type_text(target, true) +
                  " in the image. " + count_word(target_count) + " matches option " + tag +
                  ". the answer is " + tag + ".";
    return s;
}

QASample gen_existence_image(Prng& rng) {
    QASample s;
    s.family = QuestionFamily::existence;
    s.has_image = true;

    // four candidate types, exactly one present
    std::vector<int> types(12);
    for (int i = 0; i < 12; ++i) types[static_cast<std::size_t>(i)] = i;
    rng.shuffle(types);
    const TypeId present = type_from_index(types[0]);
    std::vector<TypeId> absent = {type_from_index(types[1]), type_from_index(types[2]),
                                  type_from_index(types[3])};

    auto scene = SceneSpec::empty();
    auto order = shuffled_cells(rng, scene.grid);
    std::size_t cursor = 0;
    const int n_present = static_cast<int>(rng.uniform_int(1, 3));
    for (int i = 0; i < n_present; ++i) place(scene, order[cursor++], present);
    // filler from the eight non-candidate types
    while (cursor < order.size()) {
        if (rng.uniform() < 0.4) {
            const int t = types[static_cast<std::size_t>(4 + rng.uniform_int(0, 7))];
            place(scene, order[cursor], type_from_index(t));
        }
        ++cursor;
    }

    s.scene = scene;
    s.context = kImageContext;
    s.question = "which of these appears in the image?";
    std::vector<std::string> distractors;
    for (const auto& t : absent) distractors.push_back(type_text(t, false));
    s.options = arrange_options(rng, type_text(present, false), distractors, &s.answer_index);
    const std::string tag = option_tag(s.answer_index);
    s.rationale = "a " + type_text(present, false) + " appears in the image. that is option " +
                  tag + ". the answer is " + tag + ".";
    return s;
}

QASample gen_majority_image(Prng& rng) {
    QASample s;
    s.family = QuestionFamily::majority;
    s.has_image = true;

    const auto majority = static_cast<ColorKind>(rng.uniform_int(0, 3));
    const int majority_count = static_cast<int>(rng.uniform_int(4, 5));

    auto scene = SceneSpec::empty();
    auto order = shuffled_cells(rng, scene.grid);
    std::size_t cursor = 0;
    for (int i = 0; i < majority_count; ++i) {
        const TypeId t{majority, static_cast<ShapeKind>(rng.uniform_int(0, 2))};
        place(scene, order[cursor++], t);
    }
    for (int c = 0; c < kNumColors; ++c) {
        if (static_cast<ColorKind>(c) == majority) continue;
        const int k = static_cast<int>(rng.uniform_int(0, majority_count - 2));
        for (int i = 0; i < k; ++i) {
            const TypeId t{static_cast<ColorKind>(c),
                           static_cast<ShapeKind>(rng.uniform_int(0, 2))};
            place(scene, order[cursor++], t);
        }
    }

    s.scene = scene;
    s.context = kImageContext;
    s.question = "which color appears most often?";
    std::vector<std::string> distractors;
    for (int c = 0; c < kNumColors; ++c)
        if (static_cast<ColorKind>(c) != majority)
            distractors.push_back(color_name(static_cast<ColorKind>(c)));
    s.options = arrange_options(rng, std::string(color_name(majority)), distractors,
                                &s.answer_index);
    const std::string tag = option_tag(s.answer_index);
    s.rationale = std::string(color_name(majority)) + " appears " +
                  count_word(majority_count) + " times, more than any other color. that is option " +
                  tag + ". the answer is " + tag + ".";
    return s;
}

QASample gen_counting_textonly(Prng& rng) {
    QASample s;
    s.family = QuestionFamily::counting;
    s.has_image = false;

    // three stated fact types; the asked type either appears with the target
    // count or (for zero) is an unlisted fourth type
    const int target_count = static_cast<int>(rng.uniform_int(0, 3));
    std::vector<int> types(12);
    for (int i = 0; i < 12; ++i) types[static_cast<std::size_t>(i)] = i;
    rng.shuffle(types);
    TypeId facts[3] = {type_from_index(types[0]), type_from_index(types[1]),
                       type_from_index(types[2])};
    int counts[3];
    for (auto& c : counts) c = static_cast<int>(rng.uniform_int(1, 3));
    TypeId asked = type_from_index(types[3]);
    if (target_count > 0) {
        const int slot = static_cast<int>(rng.uniform_int(0, 2));
        counts[slot] = target_count;
        asked = facts[slot];
    }

    s.context = "the scene has " + count_word(counts[0]) + " " + type_text(facts[0], true) +
                ", " + count_word(counts[1]) + " " + type_text(facts[1], true) + " and " +
                count_word(counts[2]) + " " + type_text(facts[2], true) + ".";
    s.question = "how many " + type_text(asked, true) + " are there?";
    std::vector<std::string> pool;
    for (int v = 0; v <= 3; ++v)
        if (v != target_count) pool.push_back(count_word(v));
    s.options = arrange_options(rng, count_word(target_count), pool, &s.answer_index);
    const std::string tag = option_tag(s.answer_index);
    s.rationale = "the text says there are " + count_word(target_count) + " " +
                  type_text(asked, true) + ". " + count_word(target_count) +
                  " matches option " + tag + ". the answer is " + tag + ".";
    return s;
}

std::string sample_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%06d", index);
    return buf;
}

}  // namespace

StageInput QASample::stage_input() const {
    StageInput si;
    si.context = context;
    si.question = question;
    si.options = options;
    si.image = image;
    return si;
}

std::vector<QASample> gen_dataset(int n, std::uint64_t seed, double p_imageless) {
    if (n < 1) throw ContractError("gen_dataset: n must be >= 1");
    if (!(p_imageless >= 0.0 && p_imageless <= 1.0))
        throw ContractError("gen_dataset: p_imageless outside [0,1]");
    Prng rng = Prng::for_purpose(seed, "data");
    std::vector<QASample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        QASample s;
        if (rng.uniform() < p_imageless) {
            s = gen_counting_textonly(rng);
        } else {
            switch (rng.uniform_int(0, 2)) {
                case 0: s = gen_counting_image(rng); break;
                case 1: s = gen_existence_image(rng); break;
                default: s = gen_majority_image(rng); break;
            }
            s.image = render_scene(*s.scene);
        }
        s.id = sample_id(i);
        out.push_back(std::move(s));
    }
    return out;
}

int evaluate_against_scene(const QASample& sample) {
    if (!sample.scene) throw ContractError("evaluate_against_scene: sample has no scene");
    const auto& scene = *sample.scene;
    const auto words = Vocab::split_words(sample.question);

    auto parse_color = [](const std::string& w, ColorKind* c) {
        for (int i = 0; i < kNumColors; ++i)
            if (w == color_name(static_cast<ColorKind>(i))) {
                *c = static_cast<ColorKind>(i);
                return true;
            }
        return false;
    };
    auto parse_shape = [](const std::string& w, ShapeKind* s) {
        for (int i = 0; i < kNumShapes; ++i) {
            if (w == shape_name(static_cast<ShapeKind>(i)) ||
                w == shape_plural(static_cast<ShapeKind>(i))) {
                *s = static_cast<ShapeKind>(i);
                return true;
            }
        }
        return false;
    };

    if (sample.family == QuestionFamily::counting) {
        ColorKind color{};
        ShapeKind shape{};
        bool have_c = false, have_s = false;
        for (const auto& w : words) {
            ColorKind c;
            ShapeKind sh;
            if (!have_c && parse_color(w, &c)) {
                color = c;
                have_c = true;
            } else if (!have_s && parse_shape(w, &sh)) {
                shape = sh;
                have_s = true;
            }
        }
        if (!have_c || !have_s)
            throw DataError("counting question lacks an attribute: " + sample.question);
        const std::string want = std::to_string(scene.count_of(color, shape));
        for (std::size_t i = 0; i < sample.options.size(); ++i)
            if (sample.options[i] == want) return static_cast<int>(i);
        throw DataError("gold count " + want + " missing from options");
    }

    if (sample.family == QuestionFamily::existence) {
        int found = -1;
        for (std::size_t i = 0; i < sample.options.size(); ++i) {
            const auto opt_words = Vocab::split_words(sample.options[i]);
            ColorKind c{};
            ShapeKind sh{};
            bool have_c = false, have_s = false;
            for (const auto& w : opt_words) {
                if (!have_c && parse_color(w, &c)) have_c = true;
                else if (!have_s && parse_shape(w, &sh)) have_s = true;
            }
            if (!have_c || !have_s)
                throw DataError("existence option lacks an attribute: " + sample.options[i]);
            if (scene.has(c, sh)) {
                if (found >= 0) throw DataError("existence sample has two present options");
                found = static_cast<int>(i);
            }
        }
        if (found < 0) throw DataError("existence sample has no present option");
        return found;
    }

    // majority
    int best = -1, best_count = -1;
    bool unique = true;
    for (int c = 0; c < kNumColors; ++c) {
        const int k = scene.color_count(static_cast<ColorKind>(c));
        if (k > best_count) {
            best_count = k;
            best = c;
            unique = true;
        } else if (k == best_count) {
            unique = false;
        }
    }
    if (!unique) throw DataError("majority sample lacks a strict majority");
    const std::string want = color_name(static_cast<ColorKind>(best));
    for (std::size_t i = 0; i < sample.options.size(); ++i)
        if (sample.options[i] == want) return static_cast<int>(i);
    throw DataError("majority color missing from options");
}

Vocab task_vocab() {
    std::vector<std::string> words = {
        // template markers
        "context:", "question:", "options:", "rationale:", "solution:", "answer:",
        // scene and question words
        "the", "image", "shows", "a", "grid", "of", "colored", "shapes", "scene", "has",
        "and", "text", "says", "there", "are", "is", "in", "how", "many", "which", "these",
        "appears", "most", "often", "color", "times", "more", "than", "any", "other",
        "matches", "option", "that", "answer",
        // attributes
        "red", "green", "blue", "yellow",
        "circle", "circles", "square", "squares", "triangle", "triangles",
        // option tags
        "(a)", "(b)", "(c)", "(d)",
        // punctuation emitted by the tokenizer
        ".", ",", "?",
    };
    for (int v = 0; v <= 16; ++v) words.push_back(std::to_string(v));
    return Vocab::from_words(words);
}

void save_dataset(const std::string& dir, const std::vector<QASample>& samples) {
    fs::create_directories(fs::path(dir) / "images");
    std::ofstream f(fs::path(dir) / "samples.jsonl");
    if (!f) throw IoError("save_dataset: cannot write samples.jsonl in " + dir);
    for (const auto& s : samples) {
        json j;
        j["id"] = s.id;
        j["context"] = s.context;
        j["question"] = s.question;
        j["options"] = s.options;
        j["rationale"] = s.rationale;
        j["answer"] = s.answer_index;
        j["has_image"] = s.has_image;
        j["family"] = family_name(s.family);
        if (s.has_image && s.image) {
            const std::string rel = "images/" + s.id + ".ppm";
            save_ppm(*s.image, (fs::path(dir) / rel).string());
            j["image"] = rel;
        } else {
            j["image"] = nullptr;
        }
        if (s.scene) {
            json cells = json::array();
            for (int r = 0; r < s.scene->grid; ++r) {
                for (int c = 0; c < s.scene->grid; ++c) {
                    const auto& cell = s.scene->at(r, c);
                    if (!cell.occupied) continue;
                    cells.push_back({{"r", r},
                                     {"c", c},
                                     {"shape", shape_name(cell.shape)},
                                     {"color", color_name(cell.color)}});
                }
            }
            j["scene"] = {{"grid", s.scene->grid}, {"cells", cells}};
        } else {
            j["scene"] = nullptr;
        }
        f << j.dump() << '\n';
    }
}

std::vector<QASample> load_dataset(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "samples.jsonl");
    if (!f) throw DataError("load_dataset: missing samples.jsonl in " + dir);
    std::vector<QASample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("samples.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        QASample s;
        try {
            s.id = j.at("id").get<std::string>();
            s.context = j.at("context").get<std::string>();
            s.question = j.at("question").get<std::string>();
            s.options = j.at("options").get<std::vector<std::string>>();
            s.rationale = j.at("rationale").get<std::string>();
            s.answer_index = j.at("answer").get<int>();
            s.has_image = j.at("has_image").get<bool>();
            s.family = family_from_name(j.at("family").get<std::string>());
            if (!j.at("image").is_null())
                s.image = load_ppm((fs::path(dir) / j.at("image").get<std::string>()).string());
            if (!j.at("scene").is_null()) {
                auto scene = SceneSpec::empty(j.at("scene").at("grid").get<int>());
                for (const auto& cell : j.at("scene").at("cells")) {
                    auto& slot = scene.at(cell.at("r").get<int>(), cell.at("c").get<int>());
                    slot.occupied = true;
                    const std::string sh = cell.at("shape").get<std::string>();
                    const std::string co = cell.at("color").get<std::string>();
                    for (int i = 0; i < kNumShapes; ++i)
                        if (sh == shape_name(static_cast<ShapeKind>(i)))
                            slot.shape = static_cast<ShapeKind>(i);
                    for (int i = 0; i < kNumColors; ++i)
                        if (co == color_name(static_cast<ColorKind>(i)))
                            slot.color = static_cast<ColorKind>(i);
                }
                s.scene = scene;
            }
        } catch (const json::exception& e) {
            throw DataError("samples.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
        if (s.options.size() != 4 || s.answer_index < 0 || s.answer_index >= 4)
            throw DataError("samples.jsonl line " + std::to_string(line_no) +
                            ": malformed options/answer");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError("load_dataset: " + dir + " holds no samples");
    return out;
}

}  // namespace mmlatent
