#include "tsad/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tsad {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::optional<double> parse_real(const std::string& text) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(value)) return std::nullopt;
    return value;
}

void require_variables(const MultivariateSeries& series, std::size_t expected, const char* what) {
    if (series.variables() != expected) {
        throw std::invalid_argument(std::string(what) + ": series has " + std::to_string(series.variables()) +
                                    " variables, expected " + std::to_string(expected));
    }
}

MultivariateSeries with_values(const MultivariateSeries& like, Tensor values, std::vector<std::string> names) {
    MultivariateSeries out;
    out.values = std::move(values);
    out.labels = like.labels;
    out.variable_names = std::move(names);
    out.timestep_unit = like.timestep_unit;
    return out;
}

std::vector<std::string> numbered_names(const std::string& prefix, std::size_t count) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
    return names;
}

} // namespace

void MultivariateSeries::validate() const {
    if (!values.empty() && values.rank() != 2) throw std::invalid_argument("series values must be rank 2");
    if (!values.all_finite()) throw std::invalid_argument("series contains NaN or infinite values");
    if (labels) {
        if (labels->size() != length()) {
            throw std::invalid_argument("label vector has length " + std::to_string(labels->size()) +
                                        ", series has " + std::to_string(length()) + " timesteps");
        }
        for (auto v : *labels) {
            if (v > 1) throw std::invalid_argument("labels must be 0 or 1");
        }
    }
    if (!variable_names.empty() && variable_names.size() != variables()) {
        throw std::invalid_argument("variable name count does not match variable count");
    }
}

MultivariateSeries slice_rows(const MultivariateSeries& series, std::size_t begin, std::size_t end) {
    if (begin > end || end > series.length()) {
        throw std::out_of_range("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") outside series of length " + std::to_string(series.length()));
    }
    const std::size_t cols = series.variables();
    Tensor values({end - begin, cols});
    std::copy(series.values.data() + begin * cols, series.values.data() + end * cols, values.data());
    MultivariateSeries out = with_values(series, std::move(values), series.variable_names);
    if (series.labels) {
        out.labels = LabelSeq(series.labels->begin() + static_cast<std::ptrdiff_t>(begin),
                              series.labels->begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

MultivariateSeries load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path.string() + "' is empty (header row expected)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::vector<std::string> header = split_csv_line(line);

    std::optional<std::size_t> label_index;
    if (label_column) {
        const auto it = std::find(header.begin(), header.end(), *label_column);
        if (it != header.end()) label_index = static_cast<std::size_t>(it - header.begin());
    }

    MultivariateSeries series;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_index) series.variable_names.push_back(header[c]);
    }
    const std::size_t cols = series.variable_names.size();
    if (cols == 0) throw std::runtime_error("'" + path.string() + "' has no value columns");

    std::vector<double> data;
    LabelSeq labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto value = parse_real(cells[c]);
            if (c == label_index) {
                if (!value || (*value != 0.0 && *value != 1.0)) {
                    throw std::runtime_error(path.string() + ": row " + std::to_string(row) + ", column '" +
                                             header[c] + "': label '" + cells[c] + "' is not 0 or 1");
                }
                labels.push_back(static_cast<std::uint8_t>(*value));
            } else {
                if (!value) {
                    throw std::runtime_error(path.string() + ": row " + std::to_string(row) + ", column '" +
                                             header[c] + "': '" + cells[c] + "' is not a finite number");
                }
                data.push_back(*value);
            }
        }
    }
    series.values = Tensor({row, cols}, std::move(data));
    if (label_index) series.labels = std::move(labels);
    return series;
}

void save_csv(const MultivariateSeries& series, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const std::vector<std::string> names =
        series.variable_names.empty() ? numbered_names("x", series.variables()) : series.variable_names;
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    if (series.labels) out << ',' << label_column;
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t r = 0; r < series.length(); ++r) {
        for (std::size_t c = 0; c < series.variables(); ++c) out << (c ? "," : "") << series.values(r, c);
        if (series.labels) out << ',' << static_cast<int>((*series.labels)[r]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

NormalizationState fit_normalizer(const MultivariateSeries& series) {
    if (series.length() == 0) throw std::invalid_argument("fit_normalizer: empty series");
    const std::size_t cols = series.variables();
    NormalizationState state;
    state.min.assign(cols, std::numeric_limits<double>::infinity());
    state.max.assign(cols, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < series.length(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            state.min[c] = std::min(state.min[c], series.values(r, c));
            state.max[c] = std::max(state.max[c], series.values(r, c));
        }
    }
    return state;
}

MultivariateSeries normalize(const MultivariateSeries& series, const NormalizationState& state) {
    require_variables(series, state.variables(), "normalize");
    Tensor values(series.values.shape());
    for (std::size_t r = 0; r < series.length(); ++r) {
        for (std::size_t c = 0; c < series.variables(); ++c) {
            const double range = state.max[c] - state.min[c];
            values(r, c) = range > 0.0 ? 2.0 * (series.values(r, c) - state.min[c]) / range - 1.0 : 0.0;
        }
    }
    return with_values(series, std::move(values), series.variable_names);
}

MultivariateSeries denormalize(const MultivariateSeries& series, const NormalizationState& state) {
    require_variables(series, state.variables(), "denormalize");
    Tensor values(series.values.shape());
    for (std::size_t r = 0; r < series.length(); ++r) {
        for (std::size_t c = 0; c < series.variables(); ++c) {
            const double range = state.max[c] - state.min[c];
            values(r, c) = range > 0.0 ? (series.values(r, c) + 1.0) * 0.5 * range + state.min[c] : state.min[c];
        }
    }
    return with_values(series, std::move(values), series.variable_names);
}

namespace {

struct Eigensystem {
    std::vector<double> mean;
    std::vector<double> eigenvalues; // descending, clamped at 0
    Matrix axes;                     // row i = axis for eigenvalues[i]
};

Eigensystem covariance_eigensystem(const MultivariateSeries& series) {
    const std::size_t rows = series.length();
    const std::size_t cols = series.variables();
    if (rows < 2) throw std::invalid_argument("fit_pca: need at least 2 timesteps, got " + std::to_string(rows));

    const ConstMatrixMap x = series.values.as_matrix();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigen-decomposition failed");

    Eigensystem sys;
    sys.mean.assign(mean.data(), mean.data() + cols);
    sys.axes.resize(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < cols; ++i) {
        // Eigen returns ascending order.
        const auto src = static_cast<Eigen::Index>(cols - 1 - i);
        sys.eigenvalues.push_back(std::max(0.0, solver.eigenvalues()(src)));
        Eigen::VectorXd axis = solver.eigenvectors().col(src);
        Eigen::Index largest = 0;
        axis.cwiseAbs().maxCoeff(&largest);
        if (axis(largest) < 0.0) axis = -axis;
        sys.axes.row(static_cast<Eigen::Index>(i)) = axis.transpose();
    }
    return sys;
}

std::vector<double> ratios(const std::vector<double>& eigenvalues) {
    const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
    std::vector<double> out(eigenvalues.size(), 0.0);
    if (total > 0.0) {
        for (std::size_t i = 0; i < eigenvalues.size(); ++i) out[i] = eigenvalues[i] / total;
    }
    return out;
}

} // namespace

std::vector<double> pca_spectrum(const MultivariateSeries& series) {
    return ratios(covariance_eigensystem(series).eigenvalues);
}

PcaState fit_pca(const MultivariateSeries& series, std::size_t k) {
    if (k == 0 || k > series.variables()) {
        throw std::invalid_argument("fit_pca: k = " + std::to_string(k) + " must be in [1, " +
                                    std::to_string(series.variables()) + "]");
    }
    const Eigensystem sys = covariance_eigensystem(series);
    const std::vector<double> all = ratios(sys.eigenvalues);

    PcaState pca;
    pca.mean = sys.mean;
    pca.components = Tensor({k, series.variables()});
    pca.components.as_matrix() = sys.axes.topRows(static_cast<Eigen::Index>(k));
    pca.variance_ratio.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    return pca;
}

std::size_t components_for_variance(const std::vector<double>& spectrum, double target) {
    if (spectrum.empty()) throw std::invalid_argument("components_for_variance: empty spectrum");
    double cumulative = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        cumulative += spectrum[i];
        if (cumulative >= target - 1e-12) return i + 1; // tolerate rounding in the running sum
    }
    return spectrum.size();
}

MultivariateSeries project(const MultivariateSeries& series, const PcaState& pca) {
    require_variables(series, pca.input_dim(), "project");
    const Eigen::Map<const Eigen::RowVectorXd> mean(pca.mean.data(), static_cast<Eigen::Index>(pca.mean.size()));
    Tensor values({series.length(), pca.output_dim()});
    values.as_matrix().noalias() =
        (series.values.as_matrix().rowwise() - mean) * pca.components.as_matrix().transpose();
    return with_values(series, std::move(values), numbered_names("pc", pca.output_dim()));
}

MultivariateSeries reconstruct(const MultivariateSeries& projected, const PcaState& pca) {
    require_variables(projected, pca.output_dim(), "reconstruct");
    const Eigen::Map<const Eigen::RowVectorXd> mean(pca.mean.data(), static_cast<Eigen::Index>(pca.mean.size()));
    Tensor values({projected.length(), pca.input_dim()});
    values.as_matrix() = (projected.values.as_matrix() * pca.components.as_matrix()).rowwise() + mean;
    return with_values(projected, std::move(values), numbered_names("x", pca.input_dim()));
}

std::size_t window_count(std::size_t length, std::size_t window_size, std::size_t step) {
    if (window_size == 0 || step == 0) throw std::invalid_argument("window size and step must be positive");
    if (length < window_size) return 0;
    return (length - window_size) / step + 1;
}

WindowSet make_windows(const MultivariateSeries& series, std::size_t window_size, std::size_t step) {
    const std::size_t length = series.length();
    if (window_size == 0 || step == 0) throw std::invalid_argument("make_windows: window size and step must be positive");
    if (length < window_size) {
        throw std::invalid_argument("make_windows: series length " + std::to_string(length) +
                                    " is shorter than the window size " + std::to_string(window_size));
    }
    const std::size_t count = window_count(length, window_size, step);
    const std::size_t d = series.variables();

    WindowSet set;
    set.window_size = window_size;
    set.step = step;
    set.origin_length = length;
    set.windows = Tensor({count, window_size, d});
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * step;
        set.start_indices.push_back(start);
        std::copy(series.values.data() + start * d, series.values.data() + (start + window_size) * d,
                  set.windows.data() + i * window_size * d);
    }
    return set;
}

Tensor gather_windows(const Tensor& windows, const std::vector<std::size_t>& indices) {
    const std::size_t per = windows.dim(1) * windows.dim(2);
    Tensor out({indices.size(), windows.dim(1), windows.dim(2)});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= windows.dim(0)) throw std::out_of_range("gather_windows: index out of range");
        std::copy(windows.data() + indices[i] * per, windows.data() + (indices[i] + 1) * per, out.data() + i * per);
    }
    return out;
}

std::size_t FeaturePipeline::output_dim() const {
    return pca ? pca->output_dim() : normalization.variables();
}

FeaturePipeline fit_pipeline(const MultivariateSeries& train, const PcaChoice& choice) {
    FeaturePipeline pipeline;
    pipeline.normalization = fit_normalizer(train);
    if (choice.mode == PcaChoice::Mode::none) return pipeline;

    const MultivariateSeries scaled = normalize(train, pipeline.normalization);
    std::size_t k = choice.components;
    if (choice.mode == PcaChoice::Mode::variance) k = components_for_variance(pca_spectrum(scaled), choice.variance_target);
    pipeline.pca = fit_pca(scaled, k);
    pipeline.projected_normalization = fit_normalizer(project(scaled, *pipeline.pca));
    return pipeline;
}

MultivariateSeries apply_pipeline(const MultivariateSeries& series, const FeaturePipeline& pipeline) {
    if (!pipeline.fitted()) throw std::logic_error("apply_pipeline: pipeline has not been fitted");
    MultivariateSeries out = normalize(series, pipeline.normalization);
    if (pipeline.pca) {
        out = project(out, *pipeline.pca);
        out = normalize(out, *pipeline.projected_normalization);
    }
    return out;
}

} // namespace tsad
