#include "muxai/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "muxai/png_io.hpp"

namespace muxai {

void to_json(nlohmann::json& j, const ArchConfig& a) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : a.conv_blocks)
        blocks.push_back({{"out_channels", b.out_channels}, {"kernel_size", b.kernel_size}, {"padding", b.padding}});
    j = {{"input_height", a.input_height}, {"input_width", a.input_width}, {"conv_blocks", blocks}, {"hidden_width", a.hidden_width}};
}

void from_json(const nlohmann::json& j, ArchConfig& a) {
    a = ArchConfig{};
    a.input_height = j.value("input_height", a.input_height);
    a.input_width = j.value("input_width", a.input_width);
    a.hidden_width = j.value("hidden_width", a.hidden_width);
    if (j.contains("conv_blocks")) {
        a.conv_blocks.clear();
        for (const auto& b : j.at("conv_blocks"))
            a.conv_blocks.push_back({b.value("out_channels", 16), b.value("kernel_size", 3), b.value("padding", 1)});
    }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"batch_size", c.batch_size}, {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
         {"optimizer", "sgd"}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c = TrainConfig{};
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    if (j.value("optimizer", std::string("sgd")) != "sgd") throw ConfigError("only plain SGD is supported");
}

nlohmann::json checkpoint_manifest(const ModelSnapshot& model) {
    nlohmann::json index = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : model.tensors()) {
        index.push_back({{"name", t.name}, {"kind", tensor_kind_name(t.kind)}, {"shape", t.shape},
                         {"offset", offset}, {"count", t.values.size()}});
        offset += t.values.size() * sizeof(float);
    }
    return {{"format", "muxai-checkpoint"},
            {"version", 1},
            {"arch", model.arch()},
            {"metadata", {{"tag", provenance_name(model.tag())}, {"init_seed", model.init_seed()}, {"init_scheme", kInitScheme}}},
            {"dtype", "float32-le"},
            {"total_bytes", offset},
            {"tensors", index}};
}

std::vector<std::uint8_t> checkpoint_blob(const ModelSnapshot& model) {
    std::vector<std::uint8_t> out;
    out.reserve(model.parameter_count() * 4);
    for (const auto& t : model.tensors()) {
        for (float v : t.values) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
        }
    }
    return out;
}

ModelSnapshot checkpoint_from(const nlohmann::json& manifest, std::span<const std::uint8_t> blob) {
    if (manifest.value("format", "") != "muxai-checkpoint") throw IoError("not a checkpoint manifest");
    const ArchConfig arch = manifest.at("arch").get<ArchConfig>();
    const auto& meta = manifest.at("metadata");
    auto tensors = tensor_layout(arch);
    const auto& index = manifest.at("tensors");
    if (index.size() != tensors.size()) throw IoError("checkpoint tensor index does not match architecture");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        auto& t = tensors[i];
        const auto& e = index[i];
        if (e.at("name").get<std::string>() != t.name) throw IoError("checkpoint tensor order mismatch at " + t.name);
        const auto offset = e.at("offset").get<std::size_t>();
        const auto count = e.at("count").get<std::size_t>();
        if (offset + count * 4 > blob.size()) throw IoError("checkpoint blob truncated");
        t.values.resize(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(blob[offset + 4 * k + static_cast<std::size_t>(b)]) << (8 * b);
            t.values[k] = std::bit_cast<float>(bits);
        }
    }
    return ModelSnapshot(arch, std::move(tensors), provenance_from_name(meta.at("tag").get<std::string>()),
                         meta.at("init_seed").get<std::uint64_t>());
}

void save_checkpoint(const ModelSnapshot& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string text = checkpoint_manifest(model).dump(2) + "\n";
    write_file(dir / kCheckpointManifest, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    write_file(dir / kCheckpointBlob, checkpoint_blob(model));
}

ModelSnapshot load_checkpoint(const std::filesystem::path& dir) {
    const auto text = read_file(dir / kCheckpointManifest);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    return checkpoint_from(manifest, read_file(dir / kCheckpointBlob));
}

}  // namespace muxai
