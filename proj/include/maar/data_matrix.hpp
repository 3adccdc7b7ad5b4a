#ifndef MAAR_DATA_MATRIX_HPP
#define MAAR_DATA_MATRIX_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace maar {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// N x J real data with a response-indicator mask (1 = observed).
//
// Columns are split into missing-prone columns (those that may carry
// missing values) and fully observed columns. Missing cells hold NaN.
// Instances are immutable once constructed.
class DataMatrix {
public:
    // Missing-prone columns are the columns with at least one missing cell.
    DataMatrix(Eigen::MatrixXd values, MaskMatrix mask, std::vector<std::string> names = {});

    // Explicit missing-prone set; every other column must be fully observed.
    DataMatrix(Eigen::MatrixXd values, MaskMatrix mask, std::vector<std::string> names,
               std::vector<std::size_t> missing_prone_cols);

    static DataMatrix complete(Eigen::MatrixXd values, std::vector<std::string> names = {});

    std::size_t n_rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t n_cols() const { return static_cast<std::size_t>(values_.cols()); }

    const Eigen::MatrixXd& values() const { return values_; }
    const MaskMatrix& mask() const { return mask_; }
    bool observed(std::size_t i, std::size_t j) const { return mask_(i, j) != 0; }
    double value(std::size_t i, std::size_t j) const { return values_(i, j); }

    const std::vector<std::size_t>& missing_prone_cols() const { return missing_prone_; }
    const std::vector<std::size_t>& fully_observed_cols() const { return fully_observed_; }
    bool is_missing_prone(std::size_t j) const;
    const std::vector<std::string>& names() const { return names_; }

    std::size_t observed_count(std::size_t j) const;

    // Same data restricted to a row subset, preserving column roles.
    DataMatrix select_rows(const std::vector<std::size_t>& rows) const;

private:
    void validate_and_normalize();

    Eigen::MatrixXd values_;
    MaskMatrix mask_;
    std::vector<std::string> names_;
    std::vector<std::size_t> missing_prone_;
    std::vector<std::size_t> fully_observed_;
};

// Values of a target column split by an indicator column.
struct ColumnPartition {
    std::size_t indicator_col = 0;
    std::size_t target_col = 0;
    std::vector<std::pair<std::size_t, double>> observed_part;
    std::vector<std::pair<std::size_t, double>> complement_part;
};

ColumnPartition partition(const DataMatrix& dm, std::size_t indicator_col, std::size_t target_col);

struct PatternSummary {
    std::vector<std::size_t> missing_counts;
    // Unordered pairs (j < k) of missing-prone columns with identical masks.
    std::vector<std::pair<std::size_t, std::size_t>> identical_pairs;

    bool same_pattern(std::size_t j, std::size_t k) const;
};

PatternSummary pattern_summary(const DataMatrix& dm);

DataMatrix load_csv(const std::string& path, const std::string& na_token = "NA");
DataMatrix read_csv(std::istream& in, const std::string& na_token = "NA");

// Shortest round-trip decimal text for every observed value.
void write_csv(const DataMatrix& dm, std::ostream& out, const std::string& na_token = "NA");
void save_csv(const DataMatrix& dm, const std::string& path, const std::string& na_token = "NA");

} // namespace maar

#endif
