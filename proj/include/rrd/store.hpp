#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rrd::store {

struct DigestMismatch : std::runtime_error {
    explicit DigestMismatch(const std::string& path)
        : std::runtime_error("artifact digest mismatch: " + path) {}
};

struct MissingArtifact : std::runtime_error {
    explicit MissingArtifact(const std::string& what)
        : std::runtime_error("missing artifact: " + what) {}
};

struct VerifyItem {
    std::string path;
    bool ok = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyItem> items;
    bool all_ok = true;
};

/// One run = one directory: manifest.json plus rubrics/, matrices/,
/// weights/, reports/, cache/ and trace.jsonl. Saves are atomic
/// (temp + rename) and every artifact is indexed in the manifest with its
/// content digest; loads re-verify the digest.
class RunStore {
public:
    /// Creates the directory layout and a fresh manifest.
    static RunStore create(const std::string& dir, const nlohmann::json& config);
    /// Opens an existing run; throws MissingArtifact if there is no manifest.
    static RunStore open(const std::string& dir);

    /// Returns the artifact's path relative to the run directory.
    std::string save_artifact(const std::string& kind, const std::string& id,
                              const std::string& payload);
    std::string load_artifact(const std::string& kind, const std::string& id) const;
    bool has_artifact(const std::string& kind, const std::string& id) const;

    /// Walks the manifest index and re-checks every digest.
    VerifyReport verify() const;

    const std::string& dir() const { return dir_; }
    std::string cache_dir() const;
    const nlohmann::json& manifest() const { return manifest_; }

private:
    RunStore(std::string dir, nlohmann::json manifest);
    std::string relative_path(const std::string& kind, const std::string& id) const;
    void persist_manifest() const;

    std::string dir_;
    nlohmann::json manifest_;
};

/// Atomic file write used across the toolkit: temp file in the same
/// directory, then rename over the destination.
void atomic_write(const std::string& path, const std::string& payload);

std::string read_file(const std::string& path);

} // namespace rrd::store
