#include "docres/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "docres/errors.hpp"

namespace docres {

Manifest Manifest::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);

    Manifest m;
    m.base_dir = std::filesystem::path(path).parent_path().string();
    if (m.base_dir.empty()) m.base_dir = ".";

    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) fields.push_back(field);
        if (fields.size() < 3 || fields.size() > 4)
            throw FormatError("manifest line " + std::to_string(lineno) +
                              ": expected 3 or 4 tab-separated fields");
        ManifestRecord rec;
        rec.task = task_from_name(fields[0]);
        rec.input = fields[1];
        rec.target = fields[2];
        if (fields.size() == 4) rec.aux = fields[3];
        m.records.push_back(std::move(rec));
    }
    return m;
}

void Manifest::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write manifest: " + path);
    for (const auto& rec : records) {
        f << task_name(rec.task) << '\t' << rec.input << '\t' << rec.target;
        if (!rec.aux.empty()) f << '\t' << rec.aux;
        f << '\n';
    }
    if (!f) throw IoError("manifest write failed: " + path);
}

std::string Manifest::resolve(const std::string& rel) const {
    return (std::filesystem::path(base_dir) / rel).string();
}

std::vector<size_t> Manifest::indices_for(TaskKind task) const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].task == task) idx.push_back(i);
    return idx;
}

}  // namespace docres
