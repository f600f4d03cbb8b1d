#include "tsad/score_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tsad {

void write_scores_csv(std::ostream& out, const ScoreSeries& scores, const LabelVector& labels,
                      const std::optional<LabelSeq>& truth) {
    const std::size_t n = scores.length();
    if (labels.labels.size() != n) throw std::invalid_argument("scores and labels differ in length");
    if (truth && truth->size() != n) {
        throw std::invalid_argument("ground truth has " + std::to_string(truth->size()) + " labels for " +
                                    std::to_string(n) + " timesteps");
    }
    out << "timestep,drs,residual_part,discrimination_part,lc,label" << (truth ? ",ground_truth" : "") << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t t = 0; t < n; ++t) {
        out << t << ',' << scores.drs[t] << ',' << scores.residual_part[t] << ',' << scores.discrimination_part[t]
            << ',' << scores.coverage[t] << ',' << int(labels.labels[t]);
        if (truth) out << ',' << int((*truth)[t]);
        out << '\n';
    }
}

void save_scores_csv(const std::filesystem::path& path, const ScoreSeries& scores, const LabelVector& labels,
                     const std::optional<LabelSeq>& truth) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_scores_csv(out, scores, labels, truth);
}

void write_labels_csv(std::ostream& out, const LabelVector& labels) {
    out << "timestep,label,covered\n";
    for (std::size_t t = 0; t < labels.labels.size(); ++t) {
        out << t << ',' << int(labels.labels[t]) << ',' << (labels.uncovered[t] ? 0 : 1) << '\n';
    }
}

void save_labels_csv(const std::filesystem::path& path, const LabelVector& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_labels_csv(out, labels);
}

ScoreFile load_scores_csv(const std::filesystem::path& path) {
    const MultivariateSeries table = load_csv(path, "ground_truth");
    const auto column = [&](const std::string& name) {
        const auto it = std::find(table.variable_names.begin(), table.variable_names.end(), name);
        if (it == table.variable_names.end()) throw std::runtime_error(path.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - table.variable_names.begin());
    };
    const std::size_t drs = column("drs");
    const std::size_t res = column("residual_part");
    const std::size_t disc = column("discrimination_part");
    const std::size_t lc = column("lc");
    const std::size_t label = column("label");

    ScoreFile out;
    const std::size_t n = table.length();
    for (std::size_t t = 0; t < n; ++t) {
        out.scores.drs.push_back(table.values(t, drs));
        out.scores.residual_part.push_back(table.values(t, res));
        out.scores.discrimination_part.push_back(table.values(t, disc));
        const double count = table.values(t, lc);
        const double flag = table.values(t, label);
        if (count < 0 || count != static_cast<double>(static_cast<std::size_t>(count))) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(t + 1) + ": lc must be a count");
        }
        if (flag != 0.0 && flag != 1.0) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(t + 1) + ": label must be 0 or 1");
        }
        out.scores.coverage.push_back(static_cast<std::size_t>(count));
        out.labels.push_back(static_cast<std::uint8_t>(flag));
    }
    out.truth = table.labels;
    return out;
}

} // namespace tsad
