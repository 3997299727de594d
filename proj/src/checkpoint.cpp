#include "zrlab/checkpoint.hpp"

#include <cstring>

#include "zrlab/util.hpp"

namespace zrlab {

namespace {

constexpr char kMagic[4] = {'Z', 'V', 'C', 'K'};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 3])) << 24;
}

std::size_t tensor_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    nlohmann::json dir = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : ck.tensors) {
        dir.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f32"}, {"offset", offset}});
        offset += t.data.size() * sizeof(float);
    }
    nlohmann::json header = {
        {"step", ck.step}, {"config", ck.config}, {"rng_state", ck.rng_state}, {"tensors", dir}};
    const std::string header_str = header.dump();

    std::string out;
    out.reserve(8 + header_str.size() + offset);
    out.append(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(header_str.size()));
    out += header_str;
    for (const auto& t : ck.tensors) {
        const std::size_t pos = out.size();
        out.resize(pos + t.data.size() * sizeof(float));
        std::memcpy(out.data() + pos, t.data.data(), t.data.size() * sizeof(float));
    }
    atomic_write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string raw = read_file(path);
    if (raw.size() < 8 || std::memcmp(raw.data(), kMagic, 4) != 0)
        throw DataError("checkpoint '" + path + "': bad magic");
    const std::uint32_t header_len = get_u32(raw, 4);
    if (raw.size() < 8 + static_cast<std::size_t>(header_len))
        throw DataError("checkpoint '" + path + "': truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(raw.substr(8, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint '" + path + "': bad header: " + e.what());
    }

    Checkpoint ck;
    try {
        ck.step = header.at("step").get<std::int64_t>();
        ck.config = header.at("config");
        ck.rng_state = header.at("rng_state").get<std::string>();
        const std::size_t payload_base = 8 + header_len;
        for (const auto& entry : header.at("tensors")) {
            CheckpointTensor t;
            t.name = entry.at("name").get<std::string>();
            t.shape = entry.at("shape").get<std::vector<int>>();
            if (entry.at("dtype").get<std::string>() != "f32")
                throw DataError("checkpoint '" + path + "': unsupported dtype");
            const std::size_t offset = entry.at("offset").get<std::size_t>();
            const std::size_t bytes = tensor_numel(t.shape) * sizeof(float);
            if (payload_base + offset + bytes > raw.size())
                throw DataError("checkpoint '" + path + "': truncated payload for tensor " + t.name);
            t.data.resize(tensor_numel(t.shape));
            std::memcpy(t.data.data(), raw.data() + payload_base + offset, bytes);
            ck.tensors.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint '" + path + "': bad header field: " + e.what());
    }
    return ck;
}

template <typename S>
void collect_params(const nn::ParamList<S>& params, Checkpoint& ck) {
    ck.tensors.clear();
    ck.tensors.reserve(params.size());
    for (const auto& p : params) {
        CheckpointTensor t;
        t.name = p.name;
        t.shape = p.tensor->shape;
        t.data.resize(p.tensor->numel());
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(p.tensor->data[i]);
        ck.tensors.push_back(std::move(t));
    }
}

template <typename S>
void restore_params(const Checkpoint& ck, const nn::ParamList<S>& params) {
    for (const auto& p : params) {
        const CheckpointTensor* t = ck.find(p.name);
        if (!t) throw DataError("checkpoint missing tensor " + p.name);
        if (t->shape != p.tensor->shape) {
            std::string want, have;
            for (int d : p.tensor->shape) want += (want.empty() ? "" : "x") + std::to_string(d);
            for (int d : t->shape) have += (have.empty() ? "" : "x") + std::to_string(d);
            throw DataError("checkpoint tensor " + p.name + ": shape " + have + " does not match model " +
                            want);
        }
        for (std::size_t i = 0; i < t->data.size(); ++i) p.tensor->data[i] = static_cast<S>(t->data[i]);
    }
}

template void collect_params<float>(const nn::ParamList<float>&, Checkpoint&);
template void collect_params<double>(const nn::ParamList<double>&, Checkpoint&);
template void restore_params<float>(const Checkpoint&, const nn::ParamList<float>&);
template void restore_params<double>(const Checkpoint&, const nn::ParamList<double>&);

}  // namespace zrlab
