#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/dataset.hpp"
#include "tsad/rng.hpp"

namespace tsad {

enum class AttackKind { spike, stuck, drift };

std::string_view to_string(AttackKind kind);

/// One manipulated interval [start, start + duration) on one variable.
///  - spike adds `magnitude` at every step of the interval;
///  - stuck freezes the variable at its value at `start`;
///  - drift adds a linear ramp from 0 (first step) to `magnitude` (last step).
/// Without an explicit magnitude, 3x the variable's standard deviation in the
/// clean series is used.
struct AttackSpec {
    AttackKind kind = AttackKind::spike;
    std::size_t variable = 0;
    std::size_t start = 0;
    std::size_t duration = 1;
    std::optional<double> magnitude;
};

/// "kind:variable:start:duration[:magnitude]", e.g. "stuck:1:2400:60".
AttackSpec parse_attack(std::string_view text);
std::vector<AttackSpec> parse_attacks(std::string_view semicolon_separated);

/// Coupled sinusoids: x_t = coupling * base(t) + noise, where
/// base_j(t) = amplitude_j * sin(2 pi frequency_j t + phase_j).
struct SynthConfig {
    std::size_t num_variables = 2;
    std::size_t length = 3000;
    std::uint64_t seed = 7;
    std::vector<double> frequencies;
    std::vector<double> phases;
    std::vector<double> amplitudes;
    Tensor coupling; // [T x T]
    double noise_std = 0.05;
    std::vector<AttackSpec> attacks;

    void validate() const;
};

/// Default configuration: distinct periods between ~25 and ~60 steps, each
/// variable mixing in half of the previous one's base signal.
SynthConfig coupled_sinusoids(std::size_t num_variables, std::size_t length, std::uint64_t seed);

MultivariateSeries generate_normal(const SynthConfig& config, Rng& rng);

/// Applies the attacks and labels exactly the attacked timesteps. Overlapping
/// intervals on the same variable are rejected.
MultivariateSeries inject_attacks(const MultivariateSeries& series, const std::vector<AttackSpec>& attacks);

} // namespace tsad
