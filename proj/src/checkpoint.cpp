#include "tsad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tsad {

namespace {

// Section tags, in file order.
constexpr std::uint32_t kConfig = 1;
constexpr std::uint32_t kGeometry = 2;
constexpr std::uint32_t kFeatures = 3;
constexpr std::uint32_t kGenerator = 4;
constexpr std::uint32_t kDiscriminator = 5;
constexpr std::uint32_t kLog = 6;
constexpr std::uint32_t kCalibration = 7;

class Writer {
public:
    void u32(std::uint32_t v) { bytes(v, 4); }
    void u64(std::uint64_t v) { bytes(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void text(const std::string& s) {
        u64(s.size());
        buf_.append(s);
    }
    void reals(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void tensor(const Tensor& t) {
        u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) u64(d);
        for (double x : t.values()) f64(x);
    }
    const std::string& data() const { return buf_; }

private:
    void bytes(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string buf_;
};

class Reader {
public:
    Reader(std::string data, std::string what) : buf_(std::move(data)), what_(std::move(what)) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
    std::uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string text() {
        const std::uint64_t n = length(1);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::vector<double> reals() {
        std::vector<double> v(length(8));
        for (double& x : v) x = f64();
        return v;
    }
    Tensor tensor() {
        const std::uint32_t rank = u32();
        if (rank > 8) fail("implausible tensor rank " + std::to_string(rank));
        Shape shape(rank);
        for (auto& d : shape) d = u64();
        const std::size_t n = shape_size(shape);
        if (n > remaining() / 8) fail("tensor larger than the section");
        std::vector<double> values(n);
        for (double& x : values) x = f64();
        return Tensor(std::move(shape), std::move(values));
    }
    bool done() const { return pos_ == buf_.size(); }
    [[noreturn]] void fail(const std::string& msg) const { throw std::runtime_error(what_ + ": " + msg); }

private:
    std::size_t remaining() const { return buf_.size() - pos_; }
    std::uint64_t length(std::size_t unit) {
        const std::uint64_t n = u64();
        if (n > remaining() / unit) fail("length field exceeds the data");
        return n;
    }
    std::uint64_t bytes(int n) {
        if (remaining() < static_cast<std::size_t>(n)) fail("unexpected end of data");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

void write_normalization(Writer& w, const NormalizationState& s) {
    w.reals(s.min);
    w.reals(s.max);
}

NormalizationState read_normalization(Reader& r) {
    NormalizationState s;
    s.min = r.reals();
    s.max = r.reals();
    if (s.min.size() != s.max.size()) r.fail("normalization min/max lengths differ");
    return s;
}

void write_network(Writer& w, const LstmStackParams& p) {
    w.u64(p.dims.input_dim);
    w.u64(p.dims.hidden);
    w.u64(p.dims.depth);
    w.u64(p.dims.output_dim);
    for (const Tensor* t : p.tensors()) w.tensor(*t);
}

LstmStackParams read_network(Reader& r) {
    LstmDims dims;
    dims.input_dim = r.u64();
    dims.hidden = r.u64();
    dims.depth = r.u64();
    dims.output_dim = r.u64();
    if (dims.depth > 64 || dims.hidden > (1u << 20)) r.fail("implausible network dimensions");
    LstmStackParams p = LstmStackParams::zeros(dims);
    for (Tensor* t : p.tensors()) {
        Tensor loaded = r.tensor();
        if (loaded.shape() != t->shape()) {
            r.fail("tensor shape " + shape_string(loaded.shape()) + " where " + shape_string(t->shape()) + " expected");
        }
        *t = std::move(loaded);
    }
    return p;
}

void put_section(std::ostream& out, std::uint32_t tag, const Writer& body) {
    Writer head;
    head.u32(tag);
    head.u64(body.data().size());
    out.write(head.data().data(), static_cast<std::streamsize>(head.data().size()));
    out.write(body.data().data(), static_cast<std::streamsize>(body.data().size()));
}

Reader get_section(std::istream& in, std::uint32_t expected) {
    char head[12];
    if (!in.read(head, sizeof head)) throw std::runtime_error("checkpoint truncated before section " + std::to_string(expected));
    Reader h(std::string(head, sizeof head), "checkpoint");
    const std::uint32_t tag = h.u32();
    const std::uint64_t size = h.u64();
    if (tag != expected) {
        throw std::runtime_error("checkpoint section " + std::to_string(tag) + " found where " +
                                 std::to_string(expected) + " was expected");
    }
    if (size > (std::uint64_t{1} << 34)) throw std::runtime_error("checkpoint section size is implausible");
    std::string body(size, '\0');
    if (!in.read(body.data(), static_cast<std::streamsize>(size))) {
        throw std::runtime_error("checkpoint truncated inside section " + std::to_string(tag));
    }
    return Reader(std::move(body), "checkpoint section " + std::to_string(tag));
}

} // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    Writer version;
    version.u32(kCheckpointVersion);
    out.write(version.data().data(), 4);

    Writer config;
    config.text(cp.config.to_text());
    put_section(out, kConfig, config);

    Writer geometry;
    geometry.u64(cp.model.latent_dim);
    geometry.u64(cp.model.window_size);
    geometry.u64(cp.model.window_step);
    put_section(out, kGeometry, geometry);

    Writer features;
    const FeaturePipeline& f = cp.model.features;
    write_normalization(features, f.normalization);
    features.u32(f.pca ? 1 : 0);
    if (f.pca) {
        features.reals(f.pca->mean);
        features.tensor(f.pca->components);
        features.reals(f.pca->variance_ratio);
    }
    features.u32(f.projected_normalization ? 1 : 0);
    if (f.projected_normalization) write_normalization(features, *f.projected_normalization);
    put_section(out, kFeatures, features);

    Writer gen;
    write_network(gen, cp.model.generator);
    put_section(out, kGenerator, gen);
    Writer disc;
    write_network(disc, cp.model.discriminator);
    put_section(out, kDiscriminator, disc);

    Writer log;
    log.u64(cp.model.training_log.size());
    for (const EpochStats& e : cp.model.training_log) {
        log.u64(e.epoch);
        log.f64(e.d_loss);
        log.f64(e.g_loss);
        log.f64(e.mmd);
    }
    put_section(out, kLog, log);

    Writer calibration;
    calibration.reals(cp.calibration);
    put_section(out, kCalibration, calibration);
    if (!out) throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw std::runtime_error("not a model checkpoint (bad magic)");
    }
    char version_bytes[4];
    if (!in.read(version_bytes, 4)) throw std::runtime_error("checkpoint truncated in header");
    const std::uint32_t version = Reader(std::string(version_bytes, 4), "checkpoint").u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }

    Checkpoint cp;
    Reader config = get_section(in, kConfig);
    cp.config = RunConfig::parse(config.text(), "checkpoint config");

    Reader geometry = get_section(in, kGeometry);
    cp.model.latent_dim = geometry.u64();
    cp.model.window_size = geometry.u64();
    cp.model.window_step = geometry.u64();

    Reader features = get_section(in, kFeatures);
    FeaturePipeline& f = cp.model.features;
    f.normalization = read_normalization(features);
    if (features.u32() != 0) {
        PcaState pca;
        pca.mean = features.reals();
        pca.components = features.tensor();
        pca.variance_ratio = features.reals();
        f.pca = std::move(pca);
    }
    if (features.u32() != 0) f.projected_normalization = read_normalization(features);

    Reader gen = get_section(in, kGenerator);
    cp.model.generator = read_network(gen);
    Reader disc = get_section(in, kDiscriminator);
    cp.model.discriminator = read_network(disc);

    Reader log = get_section(in, kLog);
    const std::uint64_t epochs = log.u64();
    for (std::uint64_t i = 0; i < epochs; ++i) {
        EpochStats e;
        e.epoch = log.u64();
        e.d_loss = log.f64();
        e.g_loss = log.f64();
        e.mmd = log.f64();
        cp.model.training_log.push_back(e);
    }

    Reader calibration = get_section(in, kCalibration);
    cp.calibration = calibration.reals();

    for (const Reader* r : {&config, &geometry, &features, &gen, &disc, &log, &calibration}) {
        if (!r->done()) r->fail("trailing bytes");
    }
    try {
        cp.model.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("checkpoint holds an inconsistent model: ") + e.what());
    }
    return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    try {
        Checkpoint cp = read_checkpoint(in);
        if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("unexpected data after the checkpoint");
        return cp;
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

} // namespace tsad
