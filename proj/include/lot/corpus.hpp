#pragma once

// Loading and validation of VAST-style stance datasets. One row becomes one
// Instance; duplicate (document, target) rows stay distinct because the
// dataset, not the loader, defines the instance set.

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lot/csv.hpp"
#include "lot/labels.hpp"
#include "lot/text.hpp"

namespace lot {

enum class Split { train, dev, test };

inline const std::string& split_name(Split s) {
    static const std::array<std::string, 3> names = {"train", "dev", "test"};
    return names[static_cast<std::size_t>(s)];
}

inline Split split_from_name(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "dev") return Split::dev;
    if (name == "test") return Split::test;
    throw std::runtime_error("unknown split '" + std::string(name) + "' (expected train/dev/test)");
}

struct Instance {
    std::string id;
    std::string document;
    std::string target;
    StanceLabel gold = StanceLabel::neutral;
    Split split = Split::train;
};

/// Column names in the delimited dataset file. Defaults match the official
/// VAST distribution; empty id_column synthesizes row ids r0, r1, ...
struct DatasetColumns {
    std::string id = "new_id";
    std::string document = "post";
    std::string target = "new_topic";
    std::string label = "label";
};

inline std::vector<Instance> load_dataset(const std::string& path, Split split,
                                          const DatasetColumns& columns = {},
                                          const LabelMap& label_map = LabelMap::vast_default()) {
    if (!std::filesystem::exists(path)) {
        throw std::runtime_error("dataset file not found: " + path);
    }
    CsvTable table = read_csv_file(path);

    auto need_column = [&](const std::string& name) {
        int idx = table.column(name);
        if (idx < 0) throw std::runtime_error(path + ": missing column '" + name + "'");
        return static_cast<std::size_t>(idx);
    };
    const std::size_t doc_col = need_column(columns.document);
    const std::size_t target_col = need_column(columns.target);
    const std::size_t label_col = need_column(columns.label);
    const bool synth_ids = columns.id.empty();
    const std::size_t id_col = synth_ids ? 0 : need_column(columns.id);

    std::vector<Instance> instances;
    instances.reserve(table.rows.size());
    std::set<std::string> seen_ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string row_name = path + ": row " + std::to_string(r + 1);
        Instance inst;
        inst.id = synth_ids ? "r" + std::to_string(r) : trim(row[id_col]);
        inst.document = row[doc_col];
        inst.target = row[target_col];
        inst.split = split;
        if (inst.id.empty()) throw std::runtime_error(row_name + ": empty id");
        if (!seen_ids.insert(inst.id).second) {
            throw std::runtime_error(row_name + ": duplicate id '" + inst.id + "'");
        }
        if (collapse_whitespace(inst.document).empty()) {
            throw std::runtime_error(row_name + " (id " + inst.id + "): empty document");
        }
        if (collapse_whitespace(inst.target).empty()) {
            throw std::runtime_error(row_name + " (id " + inst.id + "): empty target");
        }
        auto gold = label_map.decode_code(row[label_col]);
        if (!gold) {
            throw std::runtime_error(row_name + " (id " + inst.id + "): unmappable label code '" +
                                     row[label_col] + "'");
        }
        inst.gold = *gold;
        instances.push_back(std::move(inst));
    }
    return instances;
}

struct Dataset {
    std::vector<Instance> train;
    std::vector<Instance> dev;
    std::vector<Instance> test;
};

/// Assemble a dataset from per-split files. Ids must not collide across
/// splits: run records are keyed by instance id.
inline Dataset load_splits(const std::string& train_path, const std::string& dev_path,
                           const std::string& test_path, const DatasetColumns& columns = {},
                           const LabelMap& label_map = LabelMap::vast_default()) {
    Dataset ds;
    if (!train_path.empty()) ds.train = load_dataset(train_path, Split::train, columns, label_map);
    if (!dev_path.empty()) ds.dev = load_dataset(dev_path, Split::dev, columns, label_map);
    if (!test_path.empty()) ds.test = load_dataset(test_path, Split::test, columns, label_map);
    std::set<std::string> ids;
    for (const auto* split : {&ds.train, &ds.dev, &ds.test}) {
        for (const auto& inst : *split) {
            if (!ids.insert(inst.id).second) {
                throw std::runtime_error("instance id '" + inst.id +
                                         "' appears in more than one split; configure a globally unique id column");
            }
        }
    }
    return ds;
}

} // namespace lot
