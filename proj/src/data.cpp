#include "data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "error.hpp"
#include "rng.hpp"

namespace missddim {

namespace {

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xCBF29CE484222325ull) {
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

constexpr char kFieldSep = '\x1f';
constexpr char kRecordSep = '\x1e';

}  // namespace

const char* to_string(ColumnKind kind) {
    return kind == ColumnKind::continuous ? "continuous" : "categorical";
}

bool is_missing_token(const std::string& cell, const SchemaOptions& options) {
    const std::string lowered = to_lower(cell);
    for (const auto& token : options.missing_tokens) {
        if (lowered == to_lower(token)) {
            return true;
        }
    }
    return false;
}

int Schema::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::uint64_t Schema::hash() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const auto& col : columns) {
        h = fnv1a64(col.name, h);
        h = fnv1a64(std::string(1, kFieldSep), h);
        h = fnv1a64(to_string(col.kind), h);
        if (col.kind == ColumnKind::categorical) {
            for (const auto& cat : col.categories) {
                h = fnv1a64(std::string(1, kFieldSep), h);
                h = fnv1a64(cat, h);
            }
        } else {
            h = fnv1a64(std::string(1, kFieldSep), h);
            h = fnv1a64(csv::format_double(col.mean), h);
            h = fnv1a64(std::string(1, kFieldSep), h);
            h = fnv1a64(csv::format_double(col.stddev), h);
        }
        h = fnv1a64(std::string(1, kRecordSep), h);
    }
    return h;
}

std::string Schema::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
    return std::string(buf);
}

std::string Schema::to_json_string() const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : columns) {
        nlohmann::json j;
        j["name"] = col.name;
        j["kind"] = to_string(col.kind);
        if (col.kind == ColumnKind::categorical) {
            j["categories"] = col.categories;
        } else {
            j["mean"] = col.mean;
            j["stddev"] = col.stddev;
        }
        cols.push_back(std::move(j));
    }
    nlohmann::json root;
    root["columns"] = std::move(cols);
    root["d_enc"] = d_enc;
    root["hash"] = hash_hex();
    return root.dump(2);
}

Schema Schema::from_json_string(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::io, "invalid schema JSON: ", e.what());
    }
    Schema schema;
    int offset = 0;
    for (const auto& j : root.at("columns")) {
        ColumnSpec col;
        col.name = j.at("name").get<std::string>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "categorical") {
            col.kind = ColumnKind::categorical;
            col.categories = j.at("categories").get<std::vector<std::string>>();
            col.enc_width = static_cast<int>(col.categories.size());
        } else if (kind == "continuous") {
            col.kind = ColumnKind::continuous;
            col.mean = j.at("mean").get<double>();
            col.stddev = j.at("stddev").get<double>();
            col.enc_width = 1;
        } else {
            fail(ErrorCode::io, "unknown column kind '", kind, "' in schema JSON");
        }
        col.enc_offset = offset;
        offset += col.enc_width;
        schema.columns.push_back(std::move(col));
    }
    schema.d_enc = offset;
    return schema;
}

TabularDataset TabularDataset::from_csv(const std::string& path, const SchemaOptions& options) {
    return from_table(csv::read_file(path), options);
}

TabularDataset TabularDataset::from_table(csv::Table table, const SchemaOptions& options) {
    require(!table.header.empty(), ErrorCode::io, "CSV header is empty");
    require(table.rows.size() >= 2, ErrorCode::param, "dataset needs at least 2 data rows, got ",
            table.rows.size());
    {
        std::set<std::string> seen;
        for (const auto& name : table.header) {
            require(!name.empty(), ErrorCode::io, "CSV header contains an empty column name");
            require(seen.insert(name).second, ErrorCode::io, "duplicate column name '", name, "'");
        }
    }

    TabularDataset ds;
    ds.options_ = options;
    ds.header_ = std::move(table.header);
    ds.raw_ = std::move(table.rows);
    const int n = ds.rows();
    const int d = ds.raw_columns();
    ds.native_missing_.assign(n, std::vector<bool>(d, false));
    ds.simulated_missing_.assign(n, std::vector<bool>(d, false));
    ds.truth_.assign(n, std::vector<std::string>(d));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) {
            ds.native_missing_[r][c] = is_missing_token(ds.raw_[r][c], options);
        }
    }
    ds.infer_schema();
    ds.rebuild_encoding();
    return ds;
}

bool TabularDataset::any_missing(int row) const {
    for (int c = 0; c < raw_columns(); ++c) {
        if (!observed(row, c)) {
            return true;
        }
    }
    return false;
}

const std::string& TabularDataset::ground_truth(int row, int col) const {
    require(simulated_missing_[row][col], ErrorCode::param, "cell (", row, ",", col,
            ") has no simulated ground truth");
    return truth_[row][col];
}

void TabularDataset::infer_schema() {
    schema_.columns.clear();
    int offset = 0;
    for (int c = 0; c < raw_columns(); ++c) {
        ColumnSpec col;
        col.name = header_[c];

        std::vector<const std::string*> observed_cells;
        for (int r = 0; r < rows(); ++r) {
            if (observed(r, c)) {
                observed_cells.push_back(&raw_[r][c]);
            }
        }
        require(!observed_cells.empty(), ErrorCode::param, "column '", col.name,
                "' has no observed values");

        bool all_numeric = true;
        bool all_integers = true;
        std::set<double> distinct_values;
        for (const auto* cell : observed_cells) {
            const auto value = csv::parse_double(*cell);
            if (!value || !std::isfinite(*value)) {
                all_numeric = false;
                break;
            }
            if (*value != std::floor(*value)) {
                all_integers = false;
            }
            distinct_values.insert(*value);
        }

        const auto override_it = options_.kind_overrides.find(col.name);
        if (override_it != options_.kind_overrides.end()) {
            col.kind = override_it->second;
            require(col.kind == ColumnKind::categorical || all_numeric, ErrorCode::param,
                    "column '", col.name, "' declared continuous but has non-numeric cells");
        } else if (!all_numeric) {
            col.kind = ColumnKind::categorical;
        } else if (all_integers &&
                   static_cast<int>(distinct_values.size()) <= options_.categorical_max_distinct) {
            col.kind = ColumnKind::categorical;
        } else {
            col.kind = ColumnKind::continuous;
        }

        if (col.kind == ColumnKind::categorical) {
            for (const auto* cell : observed_cells) {
                if (std::find(col.categories.begin(), col.categories.end(), *cell) ==
                    col.categories.end()) {
                    col.categories.push_back(*cell);
                }
            }
            col.enc_width = static_cast<int>(col.categories.size());
        } else {
            require(observed_cells.size() >= 2, ErrorCode::param, "continuous column '", col.name,
                    "' needs at least 2 observed values");
            double sum = 0.0;
            for (const auto* cell : observed_cells) {
                sum += *csv::parse_double(*cell);
            }
            col.mean = sum / static_cast<double>(observed_cells.size());
            double ss = 0.0;
            for (const auto* cell : observed_cells) {
                const double d = *csv::parse_double(*cell) - col.mean;
                ss += d * d;
            }
            col.stddev = std::sqrt(ss / static_cast<double>(observed_cells.size() - 1));
            require(col.stddev > 0.0, ErrorCode::param, "continuous column '", col.name,
                    "' is constant over observed cells");
            col.enc_width = 1;
        }
        col.enc_offset = offset;
        offset += col.enc_width;
        schema_.columns.push_back(std::move(col));
    }
    schema_.d_enc = offset;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> TabularDataset::encode_row(
    const std::vector<std::string>& raw_row) const {
    require(static_cast<int>(raw_row.size()) == raw_columns(), ErrorCode::param,
            "row has ", raw_row.size(), " cells, schema expects ", raw_columns());
    Eigen::VectorXd values = Eigen::VectorXd::Zero(schema_.d_enc);
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(schema_.d_enc);
    for (int c = 0; c < raw_columns(); ++c) {
        const auto& col = schema_.columns[c];
        const std::string& cell = raw_row[c];
        if (is_missing_token(cell, options_)) {
            continue;  // zeros, mask 0
        }
        if (col.kind == ColumnKind::continuous) {
            const auto value = csv::parse_double(cell);
            require(value.has_value() && std::isfinite(*value), ErrorCode::param,
                    "cannot encode non-numeric value '", cell, "' in continuous column '",
                    col.name, "'");
            values(col.enc_offset) = (*value - col.mean) / col.stddev;
            mask(col.enc_offset) = 1.0;
        } else {
            const auto it = std::find(col.categories.begin(), col.categories.end(), cell);
            require(it != col.categories.end(), ErrorCode::param, "unseen category '", cell,
                    "' in column '", col.name, "'");
            const int idx = static_cast<int>(it - col.categories.begin());
            values(col.enc_offset + idx) = 1.0;
            mask.segment(col.enc_offset, col.enc_width).setOnes();
        }
    }
    return {std::move(values), std::move(mask)};
}

std::vector<std::string> TabularDataset::decode_row(const Eigen::VectorXd& encoded) const {
    require(encoded.size() == schema_.d_enc, ErrorCode::param, "encoded row length ",
            encoded.size(), " does not match d_enc ", schema_.d_enc);
    require(encoded.allFinite(), ErrorCode::numeric, "non-finite value in encoded row");
    std::vector<std::string> out(raw_columns());
    for (int c = 0; c < raw_columns(); ++c) {
        const auto& col = schema_.columns[c];
        if (col.kind == ColumnKind::continuous) {
            out[c] = csv::format_double(encoded(col.enc_offset) * col.stddev + col.mean);
        } else {
            int best = 0;
            for (int i = 1; i < col.enc_width; ++i) {
                if (encoded(col.enc_offset + i) > encoded(col.enc_offset + best)) {
                    best = i;  // ties keep the lowest index
                }
            }
            out[c] = col.categories[best];
        }
    }
    return out;
}

void TabularDataset::rebuild_encoding() {
    encoded_.resize(rows(), schema_.d_enc);
    encoded_mask_.resize(rows(), schema_.d_enc);
    for (int r = 0; r < rows(); ++r) {
        auto [values, mask] = encode_row(raw_[r]);
        encoded_.row(r) = values.transpose();
        encoded_mask_.row(r) = mask.transpose();
    }
}

void TabularDataset::simulate_mcar(double rate, std::uint64_t seed) {
    require(rate > 0.0 && rate < 1.0, ErrorCode::param, "missing rate must be in (0,1), got ",
            rate);
    for (int r = 0; r < rows(); ++r) {
        for (int c = 0; c < raw_columns(); ++c) {
            require(!simulated_missing_[r][c], ErrorCode::param,
                    "dataset already carries a simulated mask");
        }
    }

    RandomStream rng(seed);
    for (int r = 0; r < rows(); ++r) {
        std::vector<int> eligible;
        for (int c = 0; c < raw_columns(); ++c) {
            if (!native_missing_[r][c]) {
                eligible.push_back(c);
            }
        }
        std::vector<int> masked;
        for (const int c : eligible) {
            if (rng.uniform() < rate) {
                masked.push_back(c);
            }
        }
        if (!eligible.empty() && masked.size() == eligible.size()) {
            // Row would lose every observed cell; keep one, chosen uniformly.
            const auto keep = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1));
            masked.erase(masked.begin() + static_cast<std::ptrdiff_t>(keep));
        }
        for (const int c : masked) {
            simulated_missing_[r][c] = true;
            truth_[r][c] = raw_[r][c];
            raw_[r][c].clear();
        }
    }
    infer_schema();
    rebuild_encoding();
}

std::pair<TabularDataset, TabularDataset> TabularDataset::split(double test_fraction,
                                                                std::uint64_t seed) const {
    require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::param,
            "test fraction must be in (0,1), got ", test_fraction);
    const int n = rows();
    const int n_test = static_cast<int>(std::llround(test_fraction * n));
    require(n_test >= 2 && n - n_test >= 2, ErrorCode::param, "split would leave a fold with < 2 rows (",
            n - n_test, " train / ", n_test, " test)");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        order[i] = i;
    }
    RandomStream rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_int(0, i));
        std::swap(order[i], order[j]);
    }
    std::vector<int> test_idx(order.begin(), order.begin() + n_test);
    std::vector<int> train_idx(order.begin() + n_test, order.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    auto take = [this](const std::vector<int>& idx) {
        TabularDataset fold;
        fold.options_ = options_;
        fold.header_ = header_;
        for (const int r : idx) {
            fold.raw_.push_back(raw_[r]);
            fold.native_missing_.push_back(native_missing_[r]);
            fold.simulated_missing_.push_back(simulated_missing_[r]);
            fold.truth_.push_back(truth_[r]);
        }
        return fold;
    };
    TabularDataset train = take(train_idx);
    TabularDataset test = take(test_idx);

    // Statistics and kinds come from the training fold; category lists are
    // extended with test-only values so the test fold still encodes.
    train.infer_schema();
    for (std::size_t c = 0; c < train.schema_.columns.size(); ++c) {
        auto& col = train.schema_.columns[c];
        if (col.kind != ColumnKind::categorical) {
            continue;
        }
        for (int r = 0; r < test.rows(); ++r) {
            const std::string& cell = test.raw_[r][c];
            if (test.observed(r, static_cast<int>(c)) &&
                std::find(col.categories.begin(), col.categories.end(), cell) ==
                    col.categories.end()) {
                col.categories.push_back(cell);
            }
        }
        col.enc_width = static_cast<int>(col.categories.size());
    }
    int offset = 0;
    for (auto& col : train.schema_.columns) {
        col.enc_offset = offset;
        offset += col.enc_width;
    }
    train.schema_.d_enc = offset;

    test.schema_ = train.schema_;
    train.rebuild_encoding();
    test.rebuild_encoding();
    return {std::move(train), std::move(test)};
}

TabularDataset TabularDataset::with_filled_cells(
    const std::vector<std::pair<int, std::vector<std::string>>>& filled_rows) const {
    TabularDataset out = *this;
    for (const auto& [r, decoded] : filled_rows) {
        require(r >= 0 && r < rows(), ErrorCode::param, "filled row index ", r, " out of range");
        require(static_cast<int>(decoded.size()) == raw_columns(), ErrorCode::param,
                "filled row arity does not match dataset");
        for (int c = 0; c < raw_columns(); ++c) {
            if (!observed(r, c)) {
                out.raw_[r][c] = decoded[c];
            }
        }
    }
    return out;
}

void TabularDataset::write_csv(const std::string& path) const {
    csv::Table table;
    table.header = header_;
    table.rows = raw_;
    csv::write_file(path, table);
}

void TabularDataset::write_mask_sidecar(const std::string& path) const {
    csv::Table table;
    table.header = {"row_index", "column_name", "status"};
    for (int r = 0; r < rows(); ++r) {
        for (int c = 0; c < raw_columns(); ++c) {
            if (native_missing_[r][c]) {
                table.rows.push_back({std::to_string(r), header_[c], "native"});
            } else if (simulated_missing_[r][c]) {
                table.rows.push_back({std::to_string(r), header_[c], "simulated"});
            }
        }
    }
    csv::write_file(path, table);
}

void TabularDataset::write_truth_sidecar(const std::string& path) const {
    csv::Table table;
    table.header = {"row_index", "column_name", "value"};
    for (int r = 0; r < rows(); ++r) {
        for (int c = 0; c < raw_columns(); ++c) {
            if (simulated_missing_[r][c]) {
                table.rows.push_back({std::to_string(r), header_[c], truth_[r][c]});
            }
        }
    }
    csv::write_file(path, table);
}

void TabularDataset::write_provenance(const std::string& path) const {
    csv::Table table;
    table.header = {"row_index", "column_name", "status"};
    for (int r = 0; r < rows(); ++r) {
        for (int c = 0; c < raw_columns(); ++c) {
            table.rows.push_back(
                {std::to_string(r), header_[c], observed(r, c) ? "observed" : "generated"});
        }
    }
    csv::write_file(path, table);
}

void TabularDataset::write_schema_json(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot open '", path, "' for writing");
    out << schema_.to_json_string() << "\n";
    require(out.good(), ErrorCode::io, "write failed for '", path, "'");
}

}  // namespace missddim
