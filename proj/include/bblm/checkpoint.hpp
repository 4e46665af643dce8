#ifndef BBLM_CHECKPOINT_HPP
#define BBLM_CHECKPOINT_HPP

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/lstm.hpp"

namespace bblm {

// Checkpoint file layout, all integers and floats little-endian:
//   magic "BBLM" | u16 version | u64 config-block length | config block
//   (UTF-8 key=value lines) | matrices in declared order, each as
//   u64 rows, u64 cols, rows*cols f64 row-major | u32 CRC-32 of everything
//   before it.
// Declared matrix order: embedding, then per layer w_in, w_rec, bias (as a
// 4H x 1 matrix), then out_bias (V x 1). Float scalars in the config block
// are hexfloat so they round-trip bit-exactly.
inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'B', 'B', 'L', 'M'};

struct Checkpoint {
    ModelState state;
    int epoch = 0;        // 1-based; 0 for the pre-training snapshot
    int batch_index = 0;  // 1-based within the epoch; 0 at initialization
    int batches_per_epoch = 0;
    double fraction_of_epoch = 0.0;
    std::int64_t timestamp = 0;  // unix seconds; 0 when not recorded
};

namespace detail {

struct Crc32 {
    std::array<std::uint32_t, 256> table{};
    constexpr Crc32() {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
    }
};

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t len,
                           std::uint32_t crc = 0) {
    static constexpr Crc32 tables;
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = tables.table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

class ByteSink {
public:
    void put_bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void put_u16(std::uint16_t v) {
        std::uint8_t b[2] = {static_cast<std::uint8_t>(v),
                             static_cast<std::uint8_t>(v >> 8)};
        put_bytes(b, 2);
    }
    void put_u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        put_bytes(b, 4);
    }
    void put_u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        put_bytes(b, 8);
    }
    void put_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(bits);
    }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteSource {
public:
    ByteSource(const std::uint8_t* data, std::size_t size)
        : data_(data), size_(size) {}
    void get_bytes(void* p, std::size_t n) {
        if (pos_ + n > size_) throw DataError("checkpoint file truncated");
        std::memcpy(p, data_ + pos_, n);
        pos_ += n;
    }
    std::uint16_t get_u16() {
        std::uint8_t b[2];
        get_bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t get_u32() {
        std::uint8_t b[4];
        get_bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::uint64_t get_u64() {
        std::uint8_t b[8];
        get_bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    double get_f64() {
        std::uint64_t bits = get_u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline std::string hexfloat(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline void put_matrix(ByteSink& sink, const MatrixXd& m) {
    sink.put_u64(static_cast<std::uint64_t>(m.rows()));
    sink.put_u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) sink.put_f64(m(r, c));
}

inline MatrixXd get_matrix(ByteSource& src, Eigen::Index rows, Eigen::Index cols) {
    auto r = static_cast<Eigen::Index>(src.get_u64());
    auto c = static_cast<Eigen::Index>(src.get_u64());
    if (r != rows || c != cols)
        throw DataError("checkpoint matrix shape mismatch: expected " +
                        std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                        std::to_string(r) + "x" + std::to_string(c));
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = src.get_f64();
    return m;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const ModelState& m = ckpt.state;
    const ModelConfig& cfg = m.config;

    std::string config_block;
    auto kv = [&](const std::string& k, const std::string& v) {
        config_block += k + "=" + v + "\n";
    };
    kv("vocab_size", std::to_string(cfg.vocab_size));
    kv("embedding_dim", std::to_string(cfg.embedding_dim));
    kv("hidden_dim", std::to_string(cfg.hidden_dim));
    kv("num_layers", std::to_string(cfg.num_layers));
    kv("dropout_rate", detail::hexfloat(cfg.dropout_rate));
    kv("bptt_window", std::to_string(cfg.bptt_window));
    kv("batch_size", std::to_string(cfg.batch_size));
    kv("base_lr", detail::hexfloat(cfg.base_lr));
    kv("lr_decay_factor", detail::hexfloat(cfg.lr_decay_factor));
    kv("grad_clip", detail::hexfloat(cfg.grad_clip));
    kv("epochs", std::to_string(cfg.epochs));
    kv("seed", std::to_string(cfg.seed));
    kv("lr", detail::hexfloat(m.lr));
    kv("best_val_ppl", detail::hexfloat(m.best_val_ppl));
    kv("epoch", std::to_string(ckpt.epoch));
    kv("batch_index", std::to_string(ckpt.batch_index));
    kv("batches_per_epoch", std::to_string(ckpt.batches_per_epoch));
    kv("fraction_of_epoch", detail::hexfloat(ckpt.fraction_of_epoch));
    kv("timestamp", std::to_string(ckpt.timestamp));
    kv("rng", m.rng.serialize());

    detail::ByteSink sink;
    sink.put_bytes(kCheckpointMagic, 4);
    sink.put_u16(kCheckpointVersion);
    sink.put_u64(config_block.size());
    sink.put_bytes(config_block.data(), config_block.size());
    detail::put_matrix(sink, m.embedding);
    for (const auto& layer : m.layers) {
        detail::put_matrix(sink, layer.w_in);
        detail::put_matrix(sink, layer.w_rec);
        detail::put_matrix(sink, layer.bias);
    }
    detail::put_matrix(sink, m.out_bias);

    std::uint32_t crc = detail::crc32(sink.bytes().data(), sink.bytes().size());
    detail::ByteSink trailer;
    trailer.put_u32(crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out.write(reinterpret_cast<const char*>(sink.bytes().data()),
              static_cast<std::streamsize>(sink.bytes().size()));
    out.write(reinterpret_cast<const char*>(trailer.bytes().data()), 4);
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 18) throw DataError("checkpoint file truncated: " + path);

    std::uint32_t stored_crc = 0;
    {
        detail::ByteSource tail(bytes.data() + bytes.size() - 4, 4);
        stored_crc = tail.get_u32();
    }
    std::uint32_t actual_crc = detail::crc32(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc)
        throw DataError("checkpoint CRC mismatch (corrupt or truncated): " + path);

    detail::ByteSource src(bytes.data(), bytes.size() - 4);
    char magic[4];
    src.get_bytes(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw DataError("not a checkpoint file (bad magic): " + path);
    std::uint16_t version = src.get_u16();
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) +
                        " (expected " + std::to_string(kCheckpointVersion) + "): " + path);

    std::uint64_t block_len = src.get_u64();
    std::string config_block(block_len, '\0');
    src.get_bytes(config_block.data(), block_len);

    std::map<std::string, std::string> kv;
    for (std::size_t pos = 0; pos < config_block.size();) {
        std::size_t nl = config_block.find('\n', pos);
        if (nl == std::string::npos) nl = config_block.size();
        std::string line = config_block.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("malformed checkpoint config line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DataError("checkpoint config missing key: " + key);
        return it->second;
    };

    Checkpoint ckpt;
    ModelConfig cfg;
    cfg.vocab_size = std::stoi(get("vocab_size"));
    cfg.embedding_dim = std::stoi(get("embedding_dim"));
    cfg.hidden_dim = std::stoi(get("hidden_dim"));
    cfg.num_layers = std::stoi(get("num_layers"));
    cfg.dropout_rate = std::strtod(get("dropout_rate").c_str(), nullptr);
    cfg.bptt_window = std::stoi(get("bptt_window"));
    cfg.batch_size = std::stoi(get("batch_size"));
    cfg.base_lr = std::strtod(get("base_lr").c_str(), nullptr);
    cfg.lr_decay_factor = std::strtod(get("lr_decay_factor").c_str(), nullptr);
    cfg.grad_clip = std::strtod(get("grad_clip").c_str(), nullptr);
    cfg.epochs = std::stoi(get("epochs"));
    cfg.seed = std::stoull(get("seed"));
    cfg.validate();

    ModelState& m = ckpt.state;
    m.config = cfg;
    m.lr = std::strtod(get("lr").c_str(), nullptr);
    m.best_val_ppl = std::strtod(get("best_val_ppl").c_str(), nullptr);
    m.rng.deserialize(get("rng"));
    ckpt.epoch = std::stoi(get("epoch"));
    ckpt.batch_index = std::stoi(get("batch_index"));
    ckpt.batches_per_epoch = std::stoi(get("batches_per_epoch"));
    ckpt.fraction_of_epoch = std::strtod(get("fraction_of_epoch").c_str(), nullptr);
    ckpt.timestamp = std::stoll(get("timestamp"));

    if (ckpt.batches_per_epoch > 0) {
        double expect = static_cast<double>(ckpt.batch_index) / ckpt.batches_per_epoch;
        if (std::abs(expect - ckpt.fraction_of_epoch) > 1e-12)
            throw DataError("checkpoint fraction_of_epoch inconsistent with batch_index");
    }

    m.embedding = detail::get_matrix(src, cfg.vocab_size, cfg.embedding_dim);
    for (int l = 0; l < cfg.num_layers; ++l) {
        LstmLayer layer;
        layer.w_in = detail::get_matrix(src, cfg.layer_input(l), 4 * cfg.layer_width(l));
        layer.w_rec = detail::get_matrix(src, cfg.layer_width(l), 4 * cfg.layer_width(l));
        layer.bias = detail::get_matrix(src, 4 * cfg.layer_width(l), 1);
        m.layers.push_back(std::move(layer));
    }
    m.out_bias = detail::get_matrix(src, cfg.vocab_size, 1);
    return ckpt;
}

}  // namespace bblm

#endif
