#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"

namespace missddim {

enum class ColumnKind { continuous, categorical };

const char* to_string(ColumnKind kind);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<std::string> categories;  // categorical, first-appearance order
    double mean = 0.0;                    // continuous, observed training cells
    double stddev = 1.0;
    int enc_offset = 0;
    int enc_width = 1;
};

struct Schema {
    std::vector<ColumnSpec> columns;
    int d_enc = 0;

    int column_index(const std::string& name) const;  // -1 when absent
    std::uint64_t hash() const;
    std::string hash_hex() const;
    std::string to_json_string() const;
    static Schema from_json_string(const std::string& text);
};

struct SchemaOptions {
    // Cell spellings treated as missing, compared case-insensitively.
    std::vector<std::string> missing_tokens = {"", "na", "nan", "?"};
    // Integer-valued columns with at most this many distinct observed values
    // are treated as categorical.
    int categorical_max_distinct = 20;
    std::map<std::string, ColumnKind> kind_overrides;  // by column name
};

/// Decoded feature matrix plus per-cell bookkeeping: native missingness from
/// the source file, simulated missingness with retained ground truth, and the
/// encoded real-valued view the model consumes. Immutable after construction
/// except through simulate_mcar / fill_missing_cells, which re-derive every
/// dependent field.
class TabularDataset {
public:
    static TabularDataset from_csv(const std::string& path, const SchemaOptions& options = {});
    static TabularDataset from_table(csv::Table table, const SchemaOptions& options = {});

    int rows() const { return static_cast<int>(raw_.size()); }
    int raw_columns() const { return static_cast<int>(header_.size()); }
    const std::vector<std::string>& header() const { return header_; }
    const Schema& schema() const { return schema_; }
    const SchemaOptions& options() const { return options_; }

    const std::string& raw_cell(int row, int col) const { return raw_[row][col]; }
    bool native_missing(int row, int col) const { return native_missing_[row][col]; }
    bool simulated_missing(int row, int col) const { return simulated_missing_[row][col]; }
    bool observed(int row, int col) const {
        return !native_missing_[row][col] && !simulated_missing_[row][col];
    }
    bool any_missing(int row) const;
    const std::string& ground_truth(int row, int col) const;

    /// Encoded matrix (rows x d_enc); unobserved positions are zero.
    const Eigen::MatrixXd& encoded() const { return encoded_; }
    /// 1.0 where the encoded position belongs to an observed raw cell.
    const Eigen::MatrixXd& encoded_observed_mask() const { return encoded_mask_; }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> encode_row(
        const std::vector<std::string>& raw_row) const;
    std::vector<std::string> decode_row(const Eigen::VectorXd& encoded) const;

    /// Masks each originally observed cell independently with the given
    /// probability, keeping one observed cell in rows that would lose all of
    /// them. Records ground truth and re-infers the schema from the cells
    /// that remain observed.
    void simulate_mcar(double rate, std::uint64_t seed);

    /// Row-level split; schema statistics are recomputed on the training fold
    /// and shared with the test fold.
    std::pair<TabularDataset, TabularDataset> split(double test_fraction,
                                                    std::uint64_t seed) const;

    /// Returns a copy whose missing raw cells hold the given decoded values.
    /// Missingness masks are retained so provenance stays reconstructable.
    TabularDataset with_filled_cells(
        const std::vector<std::pair<int, std::vector<std::string>>>& filled_rows) const;

    void write_csv(const std::string& path) const;
    void write_mask_sidecar(const std::string& path) const;
    void write_truth_sidecar(const std::string& path) const;
    void write_provenance(const std::string& path) const;
    void write_schema_json(const std::string& path) const;

private:
    TabularDataset() = default;

    void infer_schema();
    void rebuild_encoding();

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> raw_;
    std::vector<std::vector<bool>> native_missing_;
    std::vector<std::vector<bool>> simulated_missing_;
    std::vector<std::vector<std::string>> truth_;  // defined on simulated cells
    Schema schema_;
    SchemaOptions options_;
    Eigen::MatrixXd encoded_;
    Eigen::MatrixXd encoded_mask_;
};

bool is_missing_token(const std::string& cell, const SchemaOptions& options);

}  // namespace missddim
