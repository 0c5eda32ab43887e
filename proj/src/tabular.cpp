#include "thal/tabular.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "thal/rng.hpp"

namespace thal::tabular {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
    if (cell.empty())
        throw std::runtime_error("missing cell at row " + std::to_string(row) +
                                 ", column '" + col + "'");
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("non-parsable cell '" + cell + "' at row " +
                                 std::to_string(row) + ", column '" + col + "'");
    }
}

double encode_sex(const std::string& cell, std::size_t row, const std::string& col) {
    std::string v = lower(cell);
    if (v == "female" || v == "f" || v == "0") return 0.0;
    if (v == "male" || v == "m" || v == "1") return 1.0;
    throw std::runtime_error("non-parsable cell '" + cell + "' at row " +
                             std::to_string(row) + ", column '" + col + "'");
}

// Per-class shuffled index lists, deterministic for a fixed seed.
std::map<int, std::vector<std::size_t>> shuffled_by_class(const LabelVector& labels,
                                                          std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (auto& [cls, idx] : by_class) {
        auto rng = make_stream(seed, 0x5114ULL, static_cast<std::uint64_t>(cls));
        std::shuffle(idx.begin(), idx.end(), rng);
    }
    return by_class;
}

}  // namespace

Dataset load_csv_text(const std::string& text, const LoadOptions& opts,
                      const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(origin + ": empty file");
    auto header = split_line(line);
    if (header.empty()) throw std::runtime_error(origin + ": empty header");

    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (lower(header[i]) == lower(opts.label_column)) label_idx = i;
    if (label_idx == header.size())
        throw std::runtime_error(origin + ": header lacks label column '" +
                                 opts.label_column + "'");

    Schema schema;
    std::vector<bool> categorical(header.size(), false);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i == label_idx) continue;
        schema.feature_names.push_back(header[i]);
        for (const auto& cat : opts.categorical_columns)
            if (lower(header[i]) == lower(cat)) {
                categorical[i] = true;
                schema.categorical_columns.push_back(header[i]);
            }
    }
    schema.label_column = header[label_idx];

    Dataset ds;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row_no;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(origin + ": row " + std::to_string(row_no) +
                                     " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(header.size()));
        std::vector<double> rec;
        rec.reserve(header.size() - 1);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_idx) continue;
            rec.push_back(categorical[i] ? encode_sex(cells[i], row_no, header[i])
                                         : parse_number(cells[i], row_no, header[i]));
        }
        const std::string& lab = cells[label_idx];
        std::string lv = lower(lab);
        int label;
        if (lv == "carrier" || lv == "1" || lv == "positive" || lv == "yes")
            label = 1;
        else if (lv == "normal" || lv == "0" || lv == "negative" || lv == "no")
            label = 0;
        else
            label = static_cast<int>(parse_number(lab, row_no, schema.label_column));
        if (label != 0 && label != 1)
            throw std::runtime_error(origin + ": row " + std::to_string(row_no) +
                                     ": label must be binary, got '" + lab + "'");
        ds.features.append_row(rec);
        ds.labels.push_back(label);
    }
    if (ds.labels.empty()) throw std::runtime_error(origin + ": empty data section");
    ds.schema = std::move(schema);
    return ds;
}

Dataset load_csv(const std::string& path, const LoadOptions& opts) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return load_csv_text(buf.str(), opts, path);
}

DatasetSplit split_learning(const FeatureMatrix& matrix, const LabelVector& labels,
                            double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("fraction must lie in (0,1)");
    if (labels.size() != matrix.rows())
        throw std::invalid_argument("labels/matrix length mismatch");
    auto by_class = shuffled_by_class(labels, seed);
    for (const auto& [cls, idx] : by_class)
        if (idx.empty()) throw std::invalid_argument("class with zero records");
    if (by_class.size() < 2)
        throw std::invalid_argument("need at least one record of each class");

    DatasetSplit split;
    split.seed = seed;
    std::map<int, std::size_t> n_train;
    std::size_t total_train = 0, total = 0;
    for (const auto& [cls, idx] : by_class) {
        double exact = fraction * static_cast<double>(idx.size());
        // round-half-down
        auto n = static_cast<std::size_t>(std::ceil(exact - 0.5));
        n_train[cls] = std::min(n, idx.size());
        total_train += n_train[cls];
        total += idx.size();
    }
    // a degenerate side is repaired by moving one row of the largest class
    auto largest = std::max_element(by_class.begin(), by_class.end(),
                                    [](const auto& a, const auto& b) {
                                        return a.second.size() < b.second.size();
                                    });
    if (total_train == 0) n_train[largest->first] = 1;
    if (total_train == total) n_train[largest->first] = largest->second.size() - 1;
    for (const auto& [cls, idx] : by_class)
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train[cls] ? split.train_indices : split.test_indices).push_back(idx[i]);
    std::sort(split.train_indices.begin(), split.train_indices.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    return split;
}

std::vector<DatasetSplit> kfold(const FeatureMatrix& matrix, const LabelVector& labels,
                                int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (labels.size() != matrix.rows())
        throw std::invalid_argument("labels/matrix length mismatch");
    auto by_class = shuffled_by_class(labels, seed);
    std::size_t minority = labels.size();
    for (const auto& [cls, idx] : by_class) minority = std::min(minority, idx.size());
    if (static_cast<std::size_t>(k) > minority)
        throw std::invalid_argument("k exceeds minority-class count");

    std::vector<std::vector<std::size_t>> folds(k);
    for (const auto& [cls, idx] : by_class) {
        std::size_t base = idx.size() / k;
        std::size_t rem = idx.size() % k;
        // Extras go to the currently smallest folds (ties to lower fold id).
        std::vector<int> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return folds[a].size() < folds[b].size();
        });
        std::vector<std::size_t> take(k, base);
        for (std::size_t i = 0; i < rem; ++i) ++take[order[i]];
        std::size_t pos = 0;
        for (int f = 0; f < k; ++f)
            for (std::size_t i = 0; i < take[f]; ++i) folds[f].push_back(idx[pos++]);
    }

    std::vector<DatasetSplit> out(k);
    for (int f = 0; f < k; ++f) {
        out[f].seed = seed;
        out[f].test_indices = folds[f];
        for (int g = 0; g < k; ++g)
            if (g != f)
                out[f].train_indices.insert(out[f].train_indices.end(),
                                            folds[g].begin(), folds[g].end());
        std::sort(out[f].train_indices.begin(), out[f].train_indices.end());
        std::sort(out[f].test_indices.begin(), out[f].test_indices.end());
    }
    return out;
}

}  // namespace thal::tabular
