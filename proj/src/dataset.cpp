#include "cawi/dataset.hpp"

#include "cawi/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cawi {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

std::string cell_ref(const std::string& name, std::size_t line_no, const std::string& column) {
    return name + ": line " + std::to_string(line_no) + ", column '" + column + "'";
}

}  // namespace

void validate(const Dataset& data) {
    const auto m = data.rows();
    const auto d = data.cols();
    if (m < 2) throw std::invalid_argument("dataset '" + data.name + "' needs at least 2 rows");
    if (d < 1) throw std::invalid_argument("dataset '" + data.name + "' needs at least 1 feature");
    if (data.labels.size() != m)
        throw std::invalid_argument("dataset '" + data.name + "': label count does not match rows");
    if (data.feature_names.size() != d)
        throw std::invalid_argument("dataset '" + data.name + "': feature name count mismatch");
    if (data.n_class < 1) throw std::invalid_argument("dataset '" + data.name + "': no classes");
    std::vector<bool> seen(static_cast<std::size_t>(data.n_class), false);
    for (int y : data.labels) {
        if (y < 0 || y >= data.n_class)
            throw std::invalid_argument("dataset '" + data.name + "': label out of range");
        seen[static_cast<std::size_t>(y)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw std::invalid_argument("dataset '" + data.name + "': a class index has no rows");
    if (!data.features.allFinite())
        throw std::invalid_argument("dataset '" + data.name + "': non-finite feature value");
}

Dataset parse_csv(const std::string& text, const LabelColumn& label_column,
                  const std::string& name) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_line(line);
            break;
        }
    }
    if (header.empty()) throw std::runtime_error(name + ": missing header row");

    std::size_t label_idx = 0;
    if (const auto* by_name = std::get_if<std::string>(&label_column); by_name && by_name->empty()) {
        label_idx = header.size() - 1;
    } else if (by_name) {
        const auto it = std::find(header.begin(), header.end(), *by_name);
        if (it == header.end())
            throw std::runtime_error(name + ": label column '" + *by_name + "' not in header");
        label_idx = static_cast<std::size_t>(it - header.begin());
    } else {
        label_idx = std::get<std::size_t>(label_column);
        if (label_idx >= header.size())
            throw std::runtime_error(name + ": label column index " + std::to_string(label_idx) +
                                     " out of range");
    }

    Dataset data;
    data.name = name;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_idx) data.feature_names.push_back(header[j]);
    const std::size_t d = data.feature_names.size();

    std::vector<double> values;
    std::map<std::string, int> class_index;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(name + ": line " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto& cell = cells[j];
            if (cell.empty() || cell == "?" || cell == "NA" || cell == "NaN")
                throw std::runtime_error("missing value at " + cell_ref(name, line_no, header[j]));
            if (j == label_idx) {
                auto [it, inserted] =
                    class_index.emplace(cell, static_cast<int>(data.class_names.size()));
                if (inserted) data.class_names.push_back(cell);
                data.labels.push_back(it->second);
                continue;
            }
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last)
                throw std::runtime_error("cannot parse '" + cell + "' as a number at " +
                                         cell_ref(name, line_no, header[j]));
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite value at " + cell_ref(name, line_no, header[j]));
            values.push_back(v);
        }
    }

    const std::size_t m = data.labels.size();
    data.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j)
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                values[i * d + j];
    data.n_class = static_cast<int>(data.class_names.size());
    if (data.n_class < 2)
        throw std::runtime_error(name + ": dataset has a single class");
    validate(data);
    return data;
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto data = parse_csv(buf.str(), label_column, path.string());
    data.name = path.stem().string();
    return data;
}

ScalerParams fit_standardizer(const Matrix& features, const IndexList& rows,
                              StdDenominator denom) {
    if (rows.empty()) throw std::invalid_argument("fit_standardizer: empty row list");
    const auto d = features.cols();
    const double n = static_cast<double>(rows.size());
    ScalerParams p;
    p.means = Vector::Zero(d);
    p.stddevs = Vector::Ones(d);
    p.constant.assign(static_cast<std::size_t>(d), false);
    for (Eigen::Index j = 0; j < d; ++j) {
        double sum = 0.0;
        for (auto r : rows) sum += features(static_cast<Eigen::Index>(r), j);
        const double mean = sum / n;
        double ss = 0.0;
        for (auto r : rows) {
            const double dev = features(static_cast<Eigen::Index>(r), j) - mean;
            ss += dev * dev;
        }
        const double divisor = (denom == StdDenominator::sample && rows.size() > 1) ? n - 1.0 : n;
        const double sd = std::sqrt(ss / divisor);
        p.means(j) = mean;
        if (sd <= 1e-12 * (std::fabs(mean) + 1.0)) {
            p.constant[static_cast<std::size_t>(j)] = true;
            p.stddevs(j) = 1.0;
        } else {
            p.stddevs(j) = sd;
        }
    }
    return p;
}

Matrix apply_standardizer(const ScalerParams& params, const Matrix& features) {
    const auto d = params.means.size();
    if (features.cols() != d)
        throw std::invalid_argument("apply_standardizer: expected " + std::to_string(d) +
                                    " columns, got " + std::to_string(features.cols()));
    Matrix out(features.rows(), d);
    for (Eigen::Index j = 0; j < d; ++j) {
        if (params.constant[static_cast<std::size_t>(j)]) {
            out.col(j).setZero();
        } else {
            out.col(j) = (features.col(j).array() - params.means(j)) / params.stddevs(j);
        }
    }
    return out;
}

Matrix one_hot(const std::vector<int>& labels, int n_class) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), n_class);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_class)
            throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                        " outside [0, " + std::to_string(n_class) + ")");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

std::vector<FoldSplit> stratified_kfold(const Dataset& data, std::size_t k, std::uint64_t seed) {
    const std::size_t m = data.rows();
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
    if (k > m) throw std::invalid_argument("stratified_kfold: k exceeds the number of rows");

    std::vector<IndexList> by_class(static_cast<std::size_t>(data.n_class));
    for (std::size_t i = 0; i < m; ++i)
        by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

    std::vector<std::size_t> fold_of(m, 0);
    std::size_t counter = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        auto rng = RngStream::derive(seed, StreamPurpose::fold_split, c);
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.below(i)]);
        for (auto row : members) fold_of[row] = counter++ % k;
    }

    std::vector<FoldSplit> folds(k);
    for (std::size_t f = 0; f < k; ++f) folds[f].fold_index = f;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            if (fold_of[i] == f) folds[f].test_rows.push_back(i);
            else folds[f].train_rows.push_back(i);
        }
    }
    return folds;
}

bool has_undersized_class(const Dataset& data, std::size_t k) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(data.n_class), 0);
    for (int y : data.labels) ++counts[static_cast<std::size_t>(y)];
    return std::any_of(counts.begin(), counts.end(), [k](std::size_t c) { return c < k; });
}

Matrix select_rows(const Matrix& m, const IndexList& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

std::vector<int> select_labels(const std::vector<int>& labels, const IndexList& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(labels[r]);
    return out;
}

}  // namespace cawi
