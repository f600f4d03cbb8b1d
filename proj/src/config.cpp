#include "tsad/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace tsad {

TauPolicy parse_tau_policy(std::string_view name) {
    if (name == "fixed") return TauPolicy::fixed;
    if (name == "quantile") return TauPolicy::quantile;
    if (name == "sweep") return TauPolicy::sweep;
    throw std::invalid_argument("unknown tau policy '" + std::string(name) + "' (expected fixed, quantile or sweep)");
}

std::string_view to_string(TauPolicy policy) {
    switch (policy) {
    case TauPolicy::fixed: return "fixed";
    case TauPolicy::quantile: return "quantile";
    case TauPolicy::sweep: return "sweep";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::uint64_t parse_size(std::string_view v) {
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size()) {
        throw std::invalid_argument("'" + std::string(v) + "' is not a non-negative integer");
    }
    return out;
}

double parse_real(std::string_view v) {
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
        throw std::invalid_argument("'" + std::string(v) + "' is not a finite number");
    }
    return out;
}

bool parse_bool(std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("'" + std::string(v) + "' is not a boolean");
}

std::string format_real(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

PcaChoice::Mode parse_pca_mode(std::string_view v) {
    if (v == "none") return PcaChoice::Mode::none;
    if (v == "fixed") return PcaChoice::Mode::fixed;
    if (v == "variance") return PcaChoice::Mode::variance;
    throw std::invalid_argument("'" + std::string(v) + "' is not a PCA mode (none, fixed, variance)");
}

std::string_view pca_mode_name(PcaChoice::Mode m) {
    switch (m) {
    case PcaChoice::Mode::none: return "none";
    case PcaChoice::Mode::fixed: return "fixed";
    case PcaChoice::Mode::variance: return "variance";
    }
    return "?";
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Get>
Field size_field(std::string key, Get member) {
    return {std::move(key), [member](RunConfig& c, std::string_view v) { member(c) = parse_size(v); },
            [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Field real_field(std::string key, Get member) {
    return {std::move(key), [member](RunConfig& c, std::string_view v) { member(c) = parse_real(v); },
            [member](const RunConfig& c) { return format_real(member(const_cast<RunConfig&>(c))); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(size_field("window_size", [](RunConfig& c) -> std::size_t& { return c.window_size; }));
        f.push_back(size_field("window_step", [](RunConfig& c) -> std::size_t& { return c.window_step; }));
        f.push_back({"pca", [](RunConfig& c, std::string_view v) { c.pca.mode = parse_pca_mode(v); },
                     [](const RunConfig& c) { return std::string(pca_mode_name(c.pca.mode)); }});
        f.push_back(size_field("pca_components", [](RunConfig& c) -> std::size_t& { return c.pca.components; }));
        f.push_back(real_field("pca_variance", [](RunConfig& c) -> double& { return c.pca.variance_target; }));
        f.push_back(size_field("latent_dim", [](RunConfig& c) -> std::size_t& { return c.train.latent_dim; }));
        f.push_back(size_field("generator_hidden", [](RunConfig& c) -> std::size_t& { return c.train.generator_hidden; }));
        f.push_back(size_field("generator_depth", [](RunConfig& c) -> std::size_t& { return c.train.generator_depth; }));
        f.push_back(size_field("discriminator_hidden",
                               [](RunConfig& c) -> std::size_t& { return c.train.discriminator_hidden; }));
        f.push_back(size_field("discriminator_depth",
                               [](RunConfig& c) -> std::size_t& { return c.train.discriminator_depth; }));
        f.push_back(size_field("epochs", [](RunConfig& c) -> std::size_t& { return c.train.epochs; }));
        f.push_back(size_field("batch_size", [](RunConfig& c) -> std::size_t& { return c.train.batch_size; }));
        f.push_back(size_field("d_steps", [](RunConfig& c) -> std::size_t& { return c.train.d_steps; }));
        f.push_back({"generator_optimizer",
                     [](RunConfig& c, std::string_view v) { c.train.generator_optimizer = parse_optimizer_kind(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.train.generator_optimizer)); }});
        f.push_back({"discriminator_optimizer",
                     [](RunConfig& c, std::string_view v) { c.train.discriminator_optimizer = parse_optimizer_kind(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.train.discriminator_optimizer)); }});
        f.push_back(real_field("generator_lr", [](RunConfig& c) -> double& { return c.train.generator_learning_rate; }));
        f.push_back(
            real_field("discriminator_lr", [](RunConfig& c) -> double& { return c.train.discriminator_learning_rate; }));
        f.push_back(real_field("adam_beta1", [](RunConfig& c) -> double& { return c.train.adam_beta1; }));
        f.push_back(real_field("adam_beta2", [](RunConfig& c) -> double& { return c.train.adam_beta2; }));
        f.push_back(real_field("adam_epsilon", [](RunConfig& c) -> double& { return c.train.adam_epsilon; }));
        f.push_back(real_field("clip_norm", [](RunConfig& c) -> double& { return c.train.clip_norm; }));
        f.push_back(size_field("monitor_size", [](RunConfig& c) -> std::size_t& { return c.train.monitor_size; }));
        f.push_back({"seed", [](RunConfig& c, std::string_view v) { c.train.seed = parse_size(v); },
                     [](const RunConfig& c) { return std::to_string(c.train.seed); }});
        f.push_back(real_field("lambda", [](RunConfig& c) -> double& { return c.lambda; }));
        f.push_back({"tau_policy", [](RunConfig& c, std::string_view v) { c.tau_policy = parse_tau_policy(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.tau_policy)); }});
        f.push_back(real_field("tau", [](RunConfig& c) -> double& { return c.tau; }));
        f.push_back(real_field("tau_quantile", [](RunConfig& c) -> double& { return c.tau_quantile; }));
        f.push_back(size_field("inversion_iterations", [](RunConfig& c) -> std::size_t& { return c.inversion.iterations; }));
        f.push_back(real_field("inversion_lr", [](RunConfig& c) -> double& { return c.inversion.learning_rate; }));
        f.push_back(size_field("inversion_restarts", [](RunConfig& c) -> std::size_t& { return c.inversion.restarts; }));
        f.push_back({"similarity", [](RunConfig& c, std::string_view v) { c.inversion.similarity = parse_similarity(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.inversion.similarity)); }});
        f.push_back(size_field("inversion_chunk", [](RunConfig& c) -> std::size_t& { return c.inversion.chunk_size; }));
        f.push_back({"calibrate", [](RunConfig& c, std::string_view v) { c.calibrate = parse_bool(v); },
                     [](const RunConfig& c) { return std::string(c.calibrate ? "true" : "false"); }});
        f.push_back({"label_column", [](RunConfig& c, std::string_view v) { c.label_column = std::string(v); },
                     [](const RunConfig& c) { return c.label_column; }});
        return f;
    }();
    return table;
}

const Field& field(std::string_view key) {
    for (const Field& f : fields()) {
        if (f.key == key) return f;
    }
    throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

} // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    const Field& f = field(key);
    try {
        f.set(*this, trim(value));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(key) + ": " + e.what());
    }
}

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

void RunConfig::validate() const {
    if (window_size == 0 || window_step == 0) throw std::invalid_argument("window_size and window_step must be positive");
    if (pca.mode == PcaChoice::Mode::fixed && pca.components == 0) {
        throw std::invalid_argument("pca = fixed needs pca_components >= 1");
    }
    if (!(pca.variance_target > 0.0 && pca.variance_target <= 1.0)) {
        throw std::invalid_argument("pca_variance must lie in (0, 1]");
    }
    train.validate();
    inversion.validate();
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
    if (!(tau_quantile >= 0.0 && tau_quantile <= 1.0)) throw std::invalid_argument("tau_quantile must lie in [0, 1]");
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const Field& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
    return out;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& source) {
    RunConfig config;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) throw std::invalid_argument(where + "expected 'key = value'");
        try {
            config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(source + ": " + e.what());
    }
    return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const Field& f : fields()) out.push_back(f.key);
        return out;
    }();
    return names;
}

} // namespace tsad
