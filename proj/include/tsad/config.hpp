#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/dataset.hpp"
#include "tsad/detector.hpp"
#include "tsad/gan.hpp"

namespace tsad {

enum class TauPolicy {
    fixed,    // the configured tau
    quantile, // tau_quantile of the calibration scores stored at training time
    sweep,    // best-F1 tau against the test labels (evaluation only)
};

TauPolicy parse_tau_policy(std::string_view name);
std::string_view to_string(TauPolicy policy);

/// Every tunable of a run. Text form is one `key = value` per line; `#`
/// starts a comment. Keys missing from a file keep their defaults.
struct RunConfig {
    std::size_t window_size = 30;
    std::size_t window_step = 10;
    PcaChoice pca;
    TrainConfig train;
    InversionConfig inversion;
    double lambda = 0.5;
    TauPolicy tau_policy = TauPolicy::quantile;
    double tau = 0.5;
    double tau_quantile = 0.99;
    /// Score the training data after training so the quantile policy has a reference.
    bool calibrate = true;
    std::string label_column = "label";

    /// Sets one key from its text value. Throws std::invalid_argument naming
    /// the key for unknown keys and unparsable or out-of-range values.
    void set(std::string_view key, std::string_view value);
    std::string get(std::string_view key) const;

    void validate() const;
    /// Every key with its current value, in the documented order.
    std::string to_text() const;

    static RunConfig parse(std::string_view text, const std::string& source = "config");
    static RunConfig load(const std::filesystem::path& path);
    static const std::vector<std::string>& keys();
};

} // namespace tsad
