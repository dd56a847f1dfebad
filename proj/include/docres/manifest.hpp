#pragma once

#include <string>
#include <vector>

#include "docres/task.hpp"

namespace docres {

// One dataset record: `task<TAB>input<TAB>target<TAB>[aux]`, paths relative
// to the manifest's directory.
struct ManifestRecord {
    TaskKind task = TaskKind::Dewarp;
    std::string input;
    std::string target;
    std::string aux;  // optional
};

struct Manifest {
    std::string base_dir;
    std::vector<ManifestRecord> records;

    static Manifest load(const std::string& path);
    void save(const std::string& path) const;

    // Absolute path of a record field.
    std::string resolve(const std::string& rel) const;
    std::vector<size_t> indices_for(TaskKind task) const;
};

}  // namespace docres
