#include "maar/data_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "maar/errors.hpp"

namespace maar {

namespace {

std::vector<std::size_t> columns_with_missing(const MaskMatrix& mask) {
    std::vector<std::size_t> cols;
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
        if ((mask.col(j).array() == 0).any()) cols.push_back(static_cast<std::size_t>(j));
    }
    return cols;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

} // namespace

DataMatrix::DataMatrix(Eigen::MatrixXd values, MaskMatrix mask, std::vector<std::string> names)
    : values_(std::move(values)), mask_(std::move(mask)), names_(std::move(names)) {
    if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols())
        throw StructureError("mask and values differ in shape");
    missing_prone_ = columns_with_missing(mask_);
    validate_and_normalize();
}

DataMatrix::DataMatrix(Eigen::MatrixXd values, MaskMatrix mask, std::vector<std::string> names,
                       std::vector<std::size_t> missing_prone_cols)
    : values_(std::move(values)), mask_(std::move(mask)), names_(std::move(names)),
      missing_prone_(std::move(missing_prone_cols)) {
    if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols())
        throw StructureError("mask and values differ in shape");
    std::sort(missing_prone_.begin(), missing_prone_.end());
    if (std::adjacent_find(missing_prone_.begin(), missing_prone_.end()) != missing_prone_.end())
        throw DomainError("duplicate missing-prone column index");
    validate_and_normalize();
}

DataMatrix DataMatrix::complete(Eigen::MatrixXd values, std::vector<std::string> names) {
    MaskMatrix mask = MaskMatrix::Ones(values.rows(), values.cols());
    return DataMatrix(std::move(values), std::move(mask), std::move(names));
}

void DataMatrix::validate_and_normalize() {
    const auto n = n_rows();
    const auto J = n_cols();
    if (n == 0 || J == 0) throw StructureError("data matrix must have at least one row and one column");
    if (names_.empty()) {
        for (std::size_t j = 0; j < J; ++j) names_.push_back("Y" + std::to_string(j + 1));
    }
    if (names_.size() != J) throw StructureError("column name count does not match column count");
    for (auto j : missing_prone_) {
        if (j >= J) throw DomainError("missing-prone column index out of range");
    }

    fully_observed_.clear();
    for (std::size_t j = 0; j < J; ++j) {
        if (!std::binary_search(missing_prone_.begin(), missing_prone_.end(), j)) fully_observed_.push_back(j);
    }

    for (std::size_t j = 0; j < J; ++j) {
        std::size_t n_obs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask_(i, j) > 1) throw DomainError("mask entries must be 0 or 1");
            if (mask_(i, j)) {
                if (!std::isfinite(values_(i, j)))
                    throw DomainError("observed cell holds a non-finite value in column " + names_[j]);
                ++n_obs;
            } else {
                values_(i, j) = std::numeric_limits<double>::quiet_NaN();
            }
        }
        if (n_obs == 0) throw DegenerateColumnError("column with zero observed values: " + names_[j]);
    }
    for (auto j : fully_observed_) {
        if ((mask_.col(j).array() == 0).any())
            throw DomainError("column " + names_[j] + " is declared fully observed but has missing cells");
    }
}

bool DataMatrix::is_missing_prone(std::size_t j) const {
    return std::binary_search(missing_prone_.begin(), missing_prone_.end(), j);
}

std::size_t DataMatrix::observed_count(std::size_t j) const {
    return static_cast<std::size_t>((mask_.col(j).array() != 0).count());
}

DataMatrix DataMatrix::select_rows(const std::vector<std::size_t>& rows) const {
    Eigen::MatrixXd v(rows.size(), values_.cols());
    MaskMatrix m(rows.size(), mask_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        v.row(r) = values_.row(rows[r]);
        m.row(r) = mask_.row(rows[r]);
    }
    return DataMatrix(std::move(v), std::move(m), names_, missing_prone_);
}

ColumnPartition partition(const DataMatrix& dm, std::size_t indicator_col, std::size_t target_col) {
    if (indicator_col >= dm.n_cols() || target_col >= dm.n_cols())
        throw DomainError("column index out of range");
    if (indicator_col == target_col) throw DomainError("indicator and target column must differ");
    if (!dm.is_missing_prone(indicator_col) || dm.observed_count(indicator_col) == dm.n_rows())
        throw DomainError("indicator column is never missing; partition is trivial");

    ColumnPartition p;
    p.indicator_col = indicator_col;
    p.target_col = target_col;
    for (std::size_t i = 0; i < dm.n_rows(); ++i) {
        if (!dm.observed(i, target_col)) continue;
        auto& part = dm.observed(i, indicator_col) ? p.observed_part : p.complement_part;
        part.emplace_back(i, dm.value(i, target_col));
    }
    return p;
}

bool PatternSummary::same_pattern(std::size_t j, std::size_t k) const {
    if (j > k) std::swap(j, k);
    return std::find(identical_pairs.begin(), identical_pairs.end(), std::make_pair(j, k)) != identical_pairs.end();
}

PatternSummary pattern_summary(const DataMatrix& dm) {
    PatternSummary s;
    s.missing_counts.resize(dm.n_cols());
    for (std::size_t j = 0; j < dm.n_cols(); ++j) s.missing_counts[j] = dm.n_rows() - dm.observed_count(j);

    const auto& cols = dm.missing_prone_cols();
    for (std::size_t a = 0; a < cols.size(); ++a) {
        if (s.missing_counts[cols[a]] == 0) continue;
        for (std::size_t b = a + 1; b < cols.size(); ++b) {
            if (s.missing_counts[cols[b]] == 0) continue;
            if (dm.mask().col(cols[a]) == dm.mask().col(cols[b])) s.identical_pairs.emplace_back(cols[a], cols[b]);
        }
    }
    return s;
}

DataMatrix read_csv(std::istream& in, const std::string& na_token) {
    std::string line;
    if (!std::getline(in, line)) throw StructureError("empty input: header row required");
    auto names = split_fields(line);
    const auto J = names.size();

    std::vector<std::vector<double>> rows;
    std::vector<std::vector<std::uint8_t>> masks;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != J)
            throw StructureError("ragged row at line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(J) + " fields, found " + std::to_string(fields.size()));
        std::vector<double> vals(J);
        std::vector<std::uint8_t> m(J);
        for (std::size_t j = 0; j < J; ++j) {
            const auto& f = fields[j];
            if (f.empty() || f == na_token) {
                vals[j] = std::numeric_limits<double>::quiet_NaN();
                m[j] = 0;
                continue;
            }
            double x = 0.0;
            const char* first = f.data();
            if (*first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), x);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(x))
                throw ParseError("non-numeric field '" + f + "'", rows.size() + 1, j + 1);
            vals[j] = x;
            m[j] = 1;
        }
        rows.push_back(std::move(vals));
        masks.push_back(std::move(m));
    }
    if (rows.empty()) throw StructureError("no data rows");

    Eigen::MatrixXd values(rows.size(), J);
    MaskMatrix mask(rows.size(), J);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < J; ++j) {
            values(i, j) = rows[i][j];
            mask(i, j) = masks[i][j];
        }
    }
    return DataMatrix(std::move(values), std::move(mask), std::move(names));
}

DataMatrix load_csv(const std::string& path, const std::string& na_token) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open input file: " + path);
    return read_csv(in, na_token);
}

void write_csv(const DataMatrix& dm, std::ostream& out, const std::string& na_token) {
    const auto& names = dm.names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < dm.n_rows(); ++i) {
        for (std::size_t j = 0; j < dm.n_cols(); ++j) {
            if (j) out << ',';
            if (!dm.observed(i, j)) {
                out << na_token;
                continue;
            }
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), dm.value(i, j));
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

void save_csv(const DataMatrix& dm, const std::string& path, const std::string& na_token) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    write_csv(dm, out, na_token);
}

} // namespace maar
