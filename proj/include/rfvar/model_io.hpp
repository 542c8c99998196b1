#ifndef RFVAR_MODEL_IO_HPP
#define RFVAR_MODEL_IO_HPP

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "rfvar/forest.hpp"

namespace rfvar {

namespace detail {

// Versioned little-endian binary model format:
//   magic "RFVM", u32 version,
//   u8 tree_type, u8 resample, u64 B, u64 s, u64 mtry, u64 min_node_size,
//   f64 alpha, u64 seed, u64 n, u64 p,
//   p feature names + response name (u64 length + bytes each),
//   then per tree: u64 node_count, nodes in preorder
//   (u8 is_leaf; leaf: f64 prediction; internal: u64 variable, f64 cut,
//   i64 left, i64 right), followed by the n u32 resample counts.
// Doubles are stored as raw bit patterns, so a load reproduces predictions
// bit-exactly.
inline constexpr char kModelMagic[4] = {'R', 'F', 'V', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out.write(buf, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out.write(buf, 4);
}

inline void put_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_i64(std::ostream& out, std::int64_t v) {
    put_u64(out, static_cast<std::uint64_t>(v));
}

inline void put_string(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint64_t get_u64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
}

inline std::uint32_t get_u32(std::istream& in) {
    char buf[4];
    in.read(buf, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
}

inline std::uint8_t get_u8(std::istream& in) {
    return static_cast<std::uint8_t>(in.get());
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline std::int64_t get_i64(std::istream& in) { return static_cast<std::int64_t>(get_u64(in)); }

inline std::string get_string(std::istream& in) {
    const std::uint64_t len = get_u64(in);
    if (len > (1ULL << 24)) {
        throw ValidationError("corrupt model file: unreasonable string length");
    }
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
}

}  // namespace detail

inline void save_forest(const ForestModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    using namespace detail;
    out.write(kModelMagic, 4);
    put_u32(out, kModelVersion);
    put_u8(out, model.config.tree_type == TreeType::cart ? 0 : 1);
    put_u8(out, model.config.resample == ResampleMode::bootstrap ? 0 : 1);
    put_u64(out, model.config.tree_count);
    put_u64(out, model.config.subsample_size);
    put_u64(out, model.config.mtry);
    put_u64(out, model.config.min_node_size);
    put_f64(out, model.config.alpha);
    put_u64(out, model.config.seed);
    put_u64(out, model.n);
    put_u64(out, model.p);
    for (const auto& name : model.column_names) {
        put_string(out, name);
    }
    put_string(out, model.response_name);
    for (std::size_t b = 0; b < model.trees.size(); ++b) {
        const TreeModel& tree = model.trees[b];
        put_u64(out, tree.nodes.size());
        for (const TreeNode& node : tree.nodes) {
            put_u8(out, node.is_leaf() ? 1 : 0);
            if (node.is_leaf()) {
                put_f64(out, node.prediction);
            } else {
                put_u64(out, node.rule.variable);
                put_f64(out, node.rule.cut);
                put_i64(out, node.left);
                put_i64(out, node.right);
            }
        }
        for (const auto c : model.counts[b].counts) {
            put_u32(out, c);
        }
    }
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

inline ForestModel load_forest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open model file: " + path);
    }
    using namespace detail;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kModelMagic, 4)) {
        throw ValidationError("not a forest model file: " + path);
    }
    const std::uint32_t version = get_u32(in);
    if (version != kModelVersion) {
        throw ValidationError("unsupported model format version " + std::to_string(version) +
                              ": " + path);
    }

    ForestModel model;
    model.config.tree_type = get_u8(in) == 0 ? TreeType::cart : TreeType::ci;
    model.config.resample = get_u8(in) == 0 ? ResampleMode::bootstrap : ResampleMode::subsample;
    model.config.tree_count = get_u64(in);
    model.config.subsample_size = get_u64(in);
    model.config.mtry = get_u64(in);
    model.config.min_node_size = get_u64(in);
    model.config.alpha = get_f64(in);
    model.config.seed = get_u64(in);
    model.n = get_u64(in);
    model.p = get_u64(in);
    if (!in || model.config.tree_count == 0 || model.n == 0 || model.p == 0) {
        throw ValidationError("corrupt model file: " + path);
    }
    for (std::size_t j = 0; j < model.p; ++j) {
        model.column_names.push_back(get_string(in));
    }
    model.response_name = get_string(in);

    model.trees.reserve(model.config.tree_count);
    model.counts.reserve(model.config.tree_count);
    for (std::size_t b = 0; b < model.config.tree_count; ++b) {
        TreeModel tree;
        tree.p = model.p;
        tree.learner = model.config.tree_type;
        const std::uint64_t node_count = get_u64(in);
        if (node_count == 0 || node_count > (1ULL << 32)) {
            throw ValidationError("corrupt model file: bad node count in " + path);
        }
        tree.nodes.resize(node_count);
        for (auto& node : tree.nodes) {
            if (get_u8(in) == 1) {
                node.prediction = get_f64(in);
            } else {
                node.rule.variable = get_u64(in);
                node.rule.cut = get_f64(in);
                node.left = get_i64(in);
                node.right = get_i64(in);
                if (node.rule.variable >= model.p || node.left < 0 || node.right < 0 ||
                    static_cast<std::uint64_t>(node.left) >= node_count ||
                    static_cast<std::uint64_t>(node.right) >= node_count) {
                    throw ValidationError("corrupt model file: invalid node in " + path);
                }
            }
        }
        std::vector<std::uint32_t> counts(model.n);
        for (auto& c : counts) {
            c = get_u32(in);
        }
        if (!in) {
            throw ValidationError("truncated model file: " + path);
        }
        model.trees.push_back(std::move(tree));
        model.counts.emplace_back(std::move(counts), model.config.resample,
                                  model.config.resample == ResampleMode::bootstrap
                                      ? model.n
                                      : model.config.subsample_size);
    }
    return model;
}

}  // namespace rfvar

#endif  // RFVAR_MODEL_IO_HPP
