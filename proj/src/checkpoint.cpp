// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <fstream>
#include <unordered_map>

#include "ccsbesr/model.hpp"

namespace ccsbesr {

namespace {

constexpr char kMagic[8] = {'C', 'C', 'S', 'B', 'E', 'S', 'R', '\n'};
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("checkpoint truncated: unexpected end of file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

template <typename T>
constexpr uint32_t dtype_code() {
    return sizeof(T) == 4 ? 0u : 1u;
}

// Little-endian serialization of each element, independent of host order.
template <typename T>
void put_tensor_payload(std::string& buf, const Tensor<T>& t) {
    const T* p = t.data();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) {
        uint64_t bits = 0;
        std::memcpy(&bits, &p[i], sizeof(T));
        for (size_t b = 0; b < sizeof(T); ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
}

template <typename T>
void read_tensor_payload(const std::string& buf, size_t off, Tensor<T>& t) {
    T* p = t.data();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) {
        uint64_t bits = 0;
        for (size_t b = 0; b < sizeof(T); ++b)
            bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[off + i * sizeof(T) + b])) << (8 * b);
        T v;
        std::memcpy(&v, &bits, sizeof(T));
        p[i] = v;
    }
}

}  // namespace

template <typename T>
void save_checkpoint_raw(const CCSBESRParams<T>& params, const std::string& config_text,
                         const std::string& path) {
    // A copy shares the tensor buffers, giving mutable references for the
    // visitor without touching the caller's parameters.
    CCSBESRParams<T> view = params;
    std::vector<std::pair<std::string, Tensor<T>*>> entries;
    visit_params<T>(view, "model", [&](const std::string& name, Tensor<T>& t) { entries.emplace_back(name, &t); });

    std::string payload;
    std::vector<uint64_t> offsets;
    offsets.reserve(entries.size());
    for (auto& [name, t] : entries) {
        offsets.push_back(payload.size());
        put_tensor_payload(payload, *t);
    }

    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kFormatVersion);
    put_u64(out, config_text.size());
    out += config_text;
    put_u64(out, entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& [name, t] = entries[i];
        put_u64(out, name.size());
        out += name;
        put_u32(out, static_cast<uint32_t>(t->ndim()));
        for (int d = 0; d < t->ndim(); ++d) put_u64(out, static_cast<uint64_t>(t->dim(d)));
        put_u32(out, dtype_code<T>());
        put_u64(out, offsets[i]);
        put_u64(out, static_cast<uint64_t>(t->numel()) * sizeof(T));
    }
    put_u64(out, payload.size());
    out += payload;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: short write to '" + path + "'");
}

template <typename T>
void save_checkpoint(const CCSBESRParams<T>& params, const ModelConfig& config, const std::string& path) {
    validate_config(config);
    save_checkpoint_raw(params, serialize_model_config(config), path);
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
        throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file (bad magic)");
    const uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version) +
                                 " (expected " + std::to_string(kFormatVersion) + ")");

    LoadedCheckpoint<T> out;
    out.config_text = r.bytes(r.u64());
    out.config = parse_model_config(out.config_text);
    out.params = init_model<T>(out.config);

    std::unordered_map<std::string, Tensor<T>*> by_name;
    std::vector<std::string> order;
    visit_params<T>(out.params, "model", [&](const std::string& name, Tensor<T>& t) {
        by_name.emplace(name, &t);
        order.push_back(name);
    });

    const uint64_t count = r.u64();
    if (count != by_name.size())
        throw std::runtime_error("checkpoint: manifest lists " + std::to_string(count) + " tensors but the model has " +
                                 std::to_string(by_name.size()));

    struct Entry {
        Tensor<T>* t;
        uint64_t offset;
        uint64_t length;
    };
    std::vector<Entry> pending;
    for (uint64_t i = 0; i < count; ++i) {
        const std::string name = r.bytes(r.u64());
        const uint32_t ndim = r.u32();
        Shape shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int64_t>(r.u64());
        const uint32_t dtype = r.u32();
        const uint64_t offset = r.u64();
        const uint64_t length = r.u64();

        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error("checkpoint: manifest tensor '" + name + "' does not exist in a model built from the embedded config");
        if (dtype != dtype_code<T>())
            throw std::runtime_error("checkpoint: tensor '" + name + "' has element type code " +
                                     std::to_string(dtype) + ", expected " + std::to_string(dtype_code<T>()));
        if (it->second->shape() != shape)
            throw std::runtime_error("checkpoint: shape disagreement for tensor '" + name + "': file has " +
                                     shape_str(shape) + ", model expects " + shape_str(it->second->shape()));
        if (length != static_cast<uint64_t>(it->second->numel()) * sizeof(T))
            throw std::runtime_error("checkpoint: payload length disagreement for tensor '" + name + "'");
        pending.push_back({it->second, offset, length});
    }

    const uint64_t payload_len = r.u64();
    r.need(payload_len);
    const size_t payload_start = r.pos;
    for (const Entry& e : pending) {
        if (e.offset + e.length > payload_len)
            throw std::runtime_error("checkpoint truncated: tensor payload exceeds the stored payload block");
        read_tensor_payload(buf, payload_start + e.offset, *e.t);
    }
    return out;
}

template void save_checkpoint_raw<float>(const CCSBESRParams<float>&, const std::string&, const std::string&);
template void save_checkpoint_raw<double>(const CCSBESRParams<double>&, const std::string&, const std::string&);
template void save_checkpoint<float>(const CCSBESRParams<float>&, const ModelConfig&, const std::string&);
template void save_checkpoint<double>(const CCSBESRParams<double>&, const ModelConfig&, const std::string&);
template LoadedCheckpoint<float> load_checkpoint<float>(const std::string&);
template LoadedCheckpoint<double> load_checkpoint<double>(const std::string&);

}  // namespace ccsbesr
