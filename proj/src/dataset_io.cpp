#include "muxai/dataset_io.hpp"

#include <cstdio>

#include "muxai/png_io.hpp"

namespace muxai {

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    const std::string text = j.dump(2) + "\n";
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

nlohmann::json counts_json(const ClassCounts& c) {
    nlohmann::json j = nlohmann::json::object();
    for (auto cls : kAllClasses) j[std::string(class_name(cls))] = c[cls];
    return j;
}

}  // namespace

void to_json(nlohmann::json& j, const GenConfig& c) {
    nlohmann::json lambda = nlohmann::json::object();
    for (auto cls : kAllClasses) lambda[std::string(class_name(cls))] = c.lambda_per_class[class_index(cls)];
    j = {{"image_width", c.image_width}, {"image_height", c.image_height}, {"lambda_per_class", lambda},
         {"max_objects", c.max_objects}, {"background_level", c.background_level}, {"noise_std", c.noise_std},
         {"train_count", c.train_count}, {"val_count", c.val_count}, {"test_count", c.test_count}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
    c = GenConfig{};
    c.image_width = j.value("image_width", c.image_width);
    c.image_height = j.value("image_height", c.image_height);
    if (j.contains("lambda_per_class")) {
        const auto& l = j.at("lambda_per_class");
        if (l.is_number()) {
            c.lambda_per_class.fill(l.get<double>());
        } else {
            for (auto it = l.begin(); it != l.end(); ++it)
                c.lambda_per_class[class_index(class_from_name(it.key()))] = it.value().get<double>();
        }
    }
    c.max_objects = j.value("max_objects", c.max_objects);
    c.background_level = j.value("background_level", c.background_level);
    c.noise_std = j.value("noise_std", c.noise_std);
    c.train_count = j.value("train_count", c.train_count);
    c.val_count = j.value("val_count", c.val_count);
    c.test_count = j.value("test_count", c.test_count);
    c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const RebalanceConfig& c) {
    j = {{"hi_percentile", c.hi_percentile}, {"lo_percentile", c.lo_percentile},
         {"keep_probability", c.keep_probability}, {"duplication_factor", c.duplication_factor}};
}

void from_json(const nlohmann::json& j, RebalanceConfig& c) {
    c = RebalanceConfig{};
    c.hi_percentile = j.value("hi_percentile", c.hi_percentile);
    c.lo_percentile = j.value("lo_percentile", c.lo_percentile);
    c.keep_probability = j.value("keep_probability", c.keep_probability);
    c.duplication_factor = j.value("duplication_factor", c.duplication_factor);
}

std::string sample_filename(SplitTag tag, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%06zu.png", index);
    return std::string(split_name(tag)) + buf;
}

nlohmann::json split_sidecar(const DatasetSplit& split) {
    nlohmann::json samples = nlohmann::json::array();
    for (std::size_t i = 0; i < split.size(); ++i) {
        const auto& s = split.samples[i];
        nlohmann::json boxes = nlohmann::json::array();
        for (const auto& b : s.boxes) boxes.push_back({class_name(b.cls), b.x0, b.y0, b.x1, b.y1});
        samples.push_back({{"image", sample_filename(split.split_tag, i)}, {"boxes", boxes},
                           {"counts", counts_json(s.counts)}, {"label", s.label}});
    }
    return {{"split", split_name(split.split_tag)}, {"generation_seed", split.generation_seed}, {"samples", samples}};
}

void save_split(const DatasetSplit& split, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < split.size(); ++i)
        write_file(dir / sample_filename(split.split_tag, i), encode_png(to_gray8(split.samples[i].image)));
    write_json(dir / (std::string(split_name(split.split_tag)) + ".json"), split_sidecar(split));
}

void save_dataset(const Dataset& data, const GenConfig& config, const std::filesystem::path& dir) {
    for (const auto* s : {&data.train, &data.val, &data.test}) save_split(*s, dir);
    nlohmann::json seeds = nlohmann::json::object();
    for (const auto* s : {&data.train, &data.val, &data.test}) seeds[std::string(split_name(s->split_tag))] = s->generation_seed;
    write_json(dir / "manifest.json", {{"gen_config", config}, {"master_seed", config.seed}, {"split_seeds", seeds},
                                       {"sizes", {{"train", data.train.size()}, {"val", data.val.size()}, {"test", data.test.size()}}}});
}

DatasetSplit load_split(const std::filesystem::path& dir, SplitTag tag) {
    const auto sidecar = read_json(dir / (std::string(split_name(tag)) + ".json"));
    DatasetSplit split;
    split.split_tag = tag;
    split.generation_seed = sidecar.value("generation_seed", std::uint64_t{0});
    for (const auto& e : sidecar.at("samples")) {
        SceneSample s;
        s.image = from_gray8(decode_png_gray(read_file(dir / e.at("image").get<std::string>())));
        for (const auto& b : e.at("boxes"))
            s.boxes.push_back({class_from_name(b.at(0).get<std::string>()), b.at(1).get<int>(), b.at(2).get<int>(),
                               b.at(3).get<int>(), b.at(4).get<int>()});
        for (auto cls : kAllClasses) s.counts[cls] = e.at("counts").value(std::string(class_name(cls)), 0);
        s.label = e.at("label").get<int>();
        split.samples.push_back(std::move(s));
    }
    return split;
}

}  // namespace muxai
