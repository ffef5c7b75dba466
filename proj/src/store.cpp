#include "rrd/store.hpp"

#include "rrd/digest.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace rrd::store {

namespace {

const char* kKinds[] = {"rubrics", "matrices", "weights", "reports", "traces"};

std::string timestamp_utc() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

void atomic_write(const std::string& path, const std::string& payload) {
    fs::path target(path);
    fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunStore::RunStore(std::string dir, nlohmann::json manifest)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {}

RunStore RunStore::create(const std::string& dir, const nlohmann::json& config) {
    fs::create_directories(dir);
    for (const char* kind : kKinds) fs::create_directories(fs::path(dir) / kind);
    fs::create_directories(fs::path(dir) / "cache");

    nlohmann::json manifest;
    manifest["run_id"] = fs::path(dir).filename().string();
    manifest["created"] = timestamp_utc();
    manifest["config"] = config;
    manifest["artifacts"] = nlohmann::json::object();
    RunStore store(dir, std::move(manifest));
    store.persist_manifest();
    return store;
}

RunStore RunStore::open(const std::string& dir) {
    fs::path manifest_path = fs::path(dir) / "manifest.json";
    if (!fs::exists(manifest_path)) throw MissingArtifact(manifest_path.string());
    return RunStore(dir, nlohmann::json::parse(read_file(manifest_path.string())));
}

std::string RunStore::relative_path(const std::string& kind, const std::string& id) const {
    if (kind == "trace") return "traces/" + id + ".jsonl";
    return kind + "/" + id + ".json";
}

void RunStore::persist_manifest() const {
    atomic_write((fs::path(dir_) / "manifest.json").string(), manifest_.dump(2) + "\n");
}

std::string RunStore::save_artifact(const std::string& kind, const std::string& id,
                                    const std::string& payload) {
    std::string rel = relative_path(kind, id);
    fs::path full = fs::path(dir_) / rel;
    fs::create_directories(full.parent_path());
    atomic_write(full.string(), payload);
    manifest_["artifacts"][rel] = sha256_hex(payload);
    persist_manifest();
    return rel;
}

bool RunStore::has_artifact(const std::string& kind, const std::string& id) const {
    return manifest_["artifacts"].contains(relative_path(kind, id));
}

std::string RunStore::load_artifact(const std::string& kind, const std::string& id) const {
    std::string rel = relative_path(kind, id);
    if (!manifest_["artifacts"].contains(rel)) throw MissingArtifact(rel);
    std::string payload = read_file((fs::path(dir_) / rel).string());
    if (sha256_hex(payload) != manifest_["artifacts"][rel].get<std::string>()) {
        throw DigestMismatch(rel);
    }
    return payload;
}

VerifyReport RunStore::verify() const {
    VerifyReport report;
    for (const auto& [rel, digest] : manifest_["artifacts"].items()) {
        VerifyItem item;
        item.path = rel;
        fs::path full = fs::path(dir_) / rel;
        if (!fs::exists(full)) {
            item.detail = "missing";
        } else if (sha256_hex(read_file(full.string())) != digest.get<std::string>()) {
            item.detail = "digest mismatch";
        } else {
            item.ok = true;
        }
        if (!item.ok) report.all_ok = false;
        report.items.push_back(std::move(item));
    }
    return report;
}

std::string RunStore::cache_dir() const { return (fs::path(dir_) / "cache").string(); }

} // namespace rrd::store
