#pragma once

#include <map>
#include <string>
#include <vector>

#include "docres/net.hpp"
#include "docres/prompt.hpp"
#include "docres/synth.hpp"

namespace docres {

// Flat key=value configuration. '#' starts a comment, whitespace around '='
// is ignored, unknown keys are rejected by name. Every default equals the
// owning module's default.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);
    static const std::vector<std::string>& known_keys();

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key, const std::string& def) const;
    int get_int(const std::string& key, int def) const;
    double get_double(const std::string& key, double def) const;
    uint64_t get_u64(const std::string& key, uint64_t def) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& def) const;

    std::string to_text() const;  // sorted key=value lines

    bool operator==(const Config& o) const { return kv_ == o.kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

prompt::PromptConfig prompt_config_from(const Config& c);
synth::SynthConfig synth_config_from(const Config& c);
net::TrainConfig train_config_from(const Config& c);

// Snapshot used for checkpoint config.txt; re-parses to an equal Config.
Config config_from_train(const net::TrainConfig& t);

}  // namespace docres
