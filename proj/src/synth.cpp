#include "tsad/synth.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tsad {

std::string_view to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::spike: return "spike";
    case AttackKind::stuck: return "stuck";
    case AttackKind::drift: return "drift";
    }
    return "unknown";
}

AttackSpec parse_attack(std::string_view text) {
    std::vector<std::string> parts;
    std::istringstream in{std::string(text)};
    std::string part;
    while (std::getline(in, part, ':')) parts.push_back(part);
    if (parts.size() != 4 && parts.size() != 5) {
        throw std::invalid_argument("attack '" + std::string(text) + "' must be kind:variable:start:duration[:magnitude]");
    }
    AttackSpec spec;
    if (parts[0] == "spike") spec.kind = AttackKind::spike;
    else if (parts[0] == "stuck") spec.kind = AttackKind::stuck;
    else if (parts[0] == "drift") spec.kind = AttackKind::drift;
    else throw std::invalid_argument("unknown attack kind '" + parts[0] + "'");
    try {
        spec.variable = std::stoul(parts[1]);
        spec.start = std::stoul(parts[2]);
        spec.duration = std::stoul(parts[3]);
        if (parts.size() == 5) spec.magnitude = std::stod(parts[4]);
    } catch (const std::exception&) {
        throw std::invalid_argument("attack '" + std::string(text) + "' has a malformed number");
    }
    return spec;
}

std::vector<AttackSpec> parse_attacks(std::string_view semicolon_separated) {
    std::vector<AttackSpec> out;
    std::istringstream in{std::string(semicolon_separated)};
    std::string item;
    while (std::getline(in, item, ';')) {
        if (!item.empty()) out.push_back(parse_attack(item));
    }
    return out;
}

void SynthConfig::validate() const {
    if (length == 0 || num_variables == 0) throw std::invalid_argument("synth: length and variable count must be positive");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("synth: noise must be non-negative");
    if (frequencies.size() != num_variables || phases.size() != num_variables || amplitudes.size() != num_variables) {
        throw std::invalid_argument("synth: need one frequency, phase and amplitude per variable");
    }
    if (coupling.shape() != Shape{num_variables, num_variables}) {
        throw std::invalid_argument("synth: coupling must be " + shape_string({num_variables, num_variables}));
    }
}

SynthConfig coupled_sinusoids(std::size_t num_variables, std::size_t length, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.num_variables = num_variables;
    cfg.length = length;
    cfg.seed = seed;
    cfg.coupling = Tensor({num_variables, num_variables});
    for (std::size_t j = 0; j < num_variables; ++j) {
        cfg.frequencies.push_back(1.0 / (25.0 + 12.0 * static_cast<double>(j % 4)));
        cfg.phases.push_back(0.7 * static_cast<double>(j));
        cfg.amplitudes.push_back(1.0);
        cfg.coupling(j, j) = 1.0;
        if (j > 0) cfg.coupling(j, j - 1) = 0.5;
    }
    return cfg;
}

MultivariateSeries generate_normal(const SynthConfig& config, Rng& rng) {
    config.validate();
    const std::size_t T = config.num_variables;
    MultivariateSeries series;
    series.values = Tensor({config.length, T});
    std::vector<double> base(T);
    for (std::size_t t = 0; t < config.length; ++t) {
        for (std::size_t j = 0; j < T; ++j) {
            base[j] = config.amplitudes[j] *
                      std::sin(2.0 * std::numbers::pi * config.frequencies[j] * static_cast<double>(t) + config.phases[j]);
        }
        for (std::size_t i = 0; i < T; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < T; ++j) v += config.coupling(i, j) * base[j];
            if (config.noise_std > 0.0) v += config.noise_std * rng.normal();
            series.values(t, i) = v;
        }
    }
    for (std::size_t i = 0; i < T; ++i) series.variable_names.push_back("sensor" + std::to_string(i + 1));
    series.labels = LabelSeq(config.length, 0);
    return series;
}

MultivariateSeries inject_attacks(const MultivariateSeries& series, const std::vector<AttackSpec>& attacks) {
    const std::size_t length = series.length();
    for (std::size_t a = 0; a < attacks.size(); ++a) {
        const AttackSpec& s = attacks[a];
        if (s.variable >= series.variables()) {
            throw std::invalid_argument("attack " + std::to_string(a) + " targets variable " + std::to_string(s.variable) +
                                        " but the series has " + std::to_string(series.variables()));
        }
        if (s.duration == 0 || s.start + s.duration > length) {
            throw std::invalid_argument("attack " + std::to_string(a) + " interval [" + std::to_string(s.start) + ", " +
                                        std::to_string(s.start + s.duration) + ") lies outside the series");
        }
        for (std::size_t b = 0; b < a; ++b) {
            const AttackSpec& o = attacks[b];
            if (o.variable == s.variable && s.start < o.start + o.duration && o.start < s.start + s.duration) {
                throw std::invalid_argument("attacks " + std::to_string(b) + " and " + std::to_string(a) +
                                            " overlap on variable " + std::to_string(s.variable));
            }
        }
    }

    std::vector<double> stddev(series.variables(), 0.0);
    for (std::size_t j = 0; j < series.variables(); ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < length; ++t) mean += series.values(t, j);
        mean /= static_cast<double>(length);
        double var = 0.0;
        for (std::size_t t = 0; t < length; ++t) var += (series.values(t, j) - mean) * (series.values(t, j) - mean);
        stddev[j] = std::sqrt(var / static_cast<double>(length));
    }

    MultivariateSeries out = series;
    if (!out.labels) out.labels = LabelSeq(length, 0);
    for (const AttackSpec& s : attacks) {
        const double magnitude = s.magnitude.value_or(3.0 * stddev[s.variable]);
        const double frozen = series.values(s.start, s.variable);
        for (std::size_t k = 0; k < s.duration; ++k) {
            double& v = out.values(s.start + k, s.variable);
            switch (s.kind) {
            case AttackKind::spike: v += magnitude; break;
            case AttackKind::stuck: v = frozen; break;
            case AttackKind::drift:
                v += s.duration == 1 ? magnitude
                                     : magnitude * static_cast<double>(k) / static_cast<double>(s.duration - 1);
                break;
            }
            (*out.labels)[s.start + k] = 1;
        }
    }
    return out;
}

} // namespace tsad
