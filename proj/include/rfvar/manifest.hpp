#ifndef RFVAR_MANIFEST_HPP
#define RFVAR_MANIFEST_HPP

#include <chrono>
#include <ctime>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfvar/common.hpp"
#include "rfvar/digest.hpp"
#include "rfvar/experiment.hpp"

namespace rfvar {

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Provenance record written once per CLI run: the command, its fully
/// resolved configuration, the seed, timestamps and a sha256 digest of every
/// output file. Replaying a manifest's command reproduces its digests.
class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json resolved_config, std::uint64_t seed)
        : command_(std::move(command)),
          config_(std::move(resolved_config)),
          seed_(seed),
          started_at_(utc_timestamp()) {}

    void add_output(const std::string& path) { output_paths_.push_back(path); }

    void add_field(const std::string& key, const nlohmann::json& value) { extra_[key] = value; }

    void write(const std::string& path) const {
        nlohmann::json j;
        j["tool"] = "rfvar";
        j["version"] = kVersion;
        j["command"] = command_;
        j["config"] = config_;
        j["seed"] = seed_;
        j["started_at"] = started_at_;
        j["finished_at"] = utc_timestamp();
        auto& outputs = j["outputs"] = nlohmann::json::array();
        for (const auto& output : output_paths_) {
            outputs.push_back({{"path", output}, {"sha256", file_sha256(output)}});
        }
        for (const auto& [key, value] : extra_.items()) {
            j[key] = value;
        }
        detail::write_text_file(path, j.dump(2) + "\n");
    }

private:
    std::string command_;
    nlohmann::json config_;
    std::uint64_t seed_ = 0;
    std::string started_at_;
    std::vector<std::string> output_paths_;
    nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace rfvar

#endif  // RFVAR_MANIFEST_HPP
