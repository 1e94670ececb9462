#include "mmlatent/tensor_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_le(std::string& out, const TensorPtr& t) {
    if (t->dtype == Dtype::f32) {
        for (double v : t->data) {
            const float f = static_cast<float>(v);
            char bytes[4];
            std::memcpy(bytes, &f, 4);
            out.append(bytes, 4);
        }
    } else {
        for (double v : t->data) {
            char bytes[8];
            std::memcpy(bytes, &v, 8);
            out.append(bytes, 8);
        }
    }
}

}  // namespace

void save_tensors(const std::string& dir, const std::map<std::string, TensorPtr>& tensors) {
    fs::create_directories(dir);
    json manifest;
    manifest["tensors"] = json::array();
    std::string blob;
    for (const auto& [name, t] : tensors) {
        if (!t) throw ContractError("save_tensors: null tensor for '" + name + "'");
        json entry;
        entry["name"] = name;
        entry["shape"] = t->shape;
        entry["dtype"] = dtype_name(t->dtype);
        entry["offset_bytes"] = blob.size();
        entry["numel"] = t->numel();
        manifest["tensors"].push_back(entry);
        append_le(blob, t);
    }
    manifest["total_bytes"] = blob.size();

    std::ofstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("save_tensors: cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';
    mf.close();

    std::ofstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!wf) throw IoError("save_tensors: cannot write weights.bin in " + dir);
    wf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    wf.close();
    if (!wf) throw IoError("save_tensors: short write to weights.bin in " + dir);
}

std::map<std::string, TensorPtr> load_tensors(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("load_tensors: missing manifest.json in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw IoError(std::string("load_tensors: corrupt manifest: ") + e.what());
    }
    if (!manifest.contains("tensors") || !manifest["tensors"].is_array() ||
        !manifest.contains("total_bytes"))
        throw IoError("load_tensors: manifest missing required fields");

    std::ifstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!wf) throw IoError("load_tensors: missing weights.bin in " + dir);
    std::string blob((std::istreambuf_iterator<char>(wf)), std::istreambuf_iterator<char>());
    if (blob.size() != manifest["total_bytes"].get<std::size_t>())
        throw IoError("load_tensors: weights.bin is " + std::to_string(blob.size()) +
                      " bytes, manifest expects " +
                      std::to_string(manifest["total_bytes"].get<std::size_t>()));

    std::map<std::string, TensorPtr> out;
    for (const auto& entry : manifest["tensors"]) {
        std::string name;
        std::vector<std::int64_t> shape;
        std::string dtype_str;
        std::size_t offset = 0;
        std::int64_t numel = 0;
        try {
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<std::int64_t>>();
            dtype_str = entry.at("dtype").get<std::string>();
            offset = entry.at("offset_bytes").get<std::size_t>();
            numel = entry.at("numel").get<std::int64_t>();
        } catch (const json::exception& e) {
            throw IoError(std::string("load_tensors: malformed manifest entry: ") + e.what());
        }
        Dtype dt;
        try {
            dt = dtype_from_name(dtype_str);
        } catch (const ConfigError&) {
            throw IoError("load_tensors: unknown dtype '" + dtype_str + "' for '" + name + "'");
        }
        if (shape_numel(shape) != numel)
            throw IoError("load_tensors: shape " + shape_to_string(shape) +
                          " disagrees with numel " + std::to_string(numel) + " for '" + name +
                          "'");
        const std::size_t bytes = static_cast<std::size_t>(numel) * dtype_byte_size(dt);
        if (offset + bytes > blob.size())
            throw IoError("load_tensors: payload for '" + name + "' exceeds weights.bin");

        auto t = std::make_shared<Tensor>();
        t->shape = shape;
        t->dtype = dt;
        t->data.resize(static_cast<std::size_t>(numel));
        const char* src = blob.data() + offset;
        if (dt == Dtype::f32) {
            for (std::int64_t i = 0; i < numel; ++i) {
                float f;
                std::memcpy(&f, src + i * 4, 4);
                t->data[static_cast<std::size_t>(i)] = static_cast<double>(f);
            }
        } else {
            for (std::int64_t i = 0; i < numel; ++i) {
                double v;
                std::memcpy(&v, src + i * 8, 8);
                t->data[static_cast<std::size_t>(i)] = v;
            }
        }
        if (out.count(name)) throw IoError("load_tensors: duplicate tensor name '" + name + "'");
        out[name] = t;
    }
    return out;
}

}  // namespace mmlatent
