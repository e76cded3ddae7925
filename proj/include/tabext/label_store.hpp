#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tabext {

enum class LabelSource { Seed, Human };

const char* to_string(LabelSource source);
LabelSource label_source_from_string(const std::string& s);

struct LabelKey {
    std::string doc_id;
    int token_index = 0;

    auto operator<=>(const LabelKey&) const = default;
};

struct LabelRecord {
    LabelKey key;
    int label = 0;
    LabelSource source = LabelSource::Seed;
    int revision = 0;
    std::int64_t timestamp_ms = 0;

    bool operator==(const LabelRecord&) const = default;
};

nlohmann::json to_json(const LabelRecord& record);
LabelRecord label_record_from_json(const nlohmann::json& j);

enum class LabelStoreMode { Append, ReadOnly };

/// One write request of a batch.
struct LabelWrite {
    LabelKey key;
    int label = 0;
};

/// Per-token labels with a revision history.
///
/// Each write bumps the key's revision by one. Reads return the newest record.
/// For training exports a human record always wins over a seed record, even
/// a newer one. When backed by a file every accepted write is appended to it
/// as one JSON line. Writes are serialized; readers never see a half-applied
/// batch.
class LabelStore {
public:
    LabelStore() = default;

    /// Replays an existing label file (if any). In Append mode subsequent
    /// writes are appended to it; in ReadOnly mode they stay in memory.
    explicit LabelStore(std::filesystem::path path, LabelStoreMode mode = LabelStoreMode::Append);

    LabelStore(const LabelStore&) = delete;
    LabelStore& operator=(const LabelStore&) = delete;

    /// Restricts writes to documents/token indices in `token_counts`. Without
    /// it any key is accepted.
    void set_known_tokens(std::map<std::string, int> token_counts);

    LabelRecord write(const LabelKey& key, int label, LabelSource source, std::optional<std::int64_t> timestamp_ms = {});

    /// Validates every entry first, then applies all of them or none.
    std::vector<LabelRecord> write_batch(std::span<const LabelWrite> writes, LabelSource source,
        std::optional<std::int64_t> timestamp_ms = {});

    std::optional<LabelRecord> read(const LabelKey& key) const;

    /// Latest human record for the key, if a human ever labelled it.
    std::optional<LabelRecord> human(const LabelKey& key) const;

    /// Record used for training: the latest human one, else the latest.
    std::optional<LabelRecord> effective(const LabelKey& key) const;

    /// Effective records of every key, ordered by key.
    std::vector<LabelRecord> export_records() const;

    /// Writes export_records() as JSON Lines.
    void export_jsonl(std::ostream& out) const;

    std::size_t size() const;

    /// Number of writes applied since construction (including replayed ones).
    std::uint64_t generation() const;

private:
    struct Entry {
        LabelRecord latest;
        std::optional<LabelRecord> latest_human;
    };

    void check_writable(const LabelKey& key, int label) const;
    LabelRecord apply(const LabelKey& key, int label, LabelSource source, std::int64_t timestamp_ms);
    void apply_record(const LabelRecord& record);

    mutable std::shared_mutex mutex_;
    std::map<LabelKey, Entry> entries_;
    std::optional<std::map<std::string, int>> known_tokens_;
    std::optional<std::filesystem::path> path_;
    std::ofstream log_;
    std::uint64_t generation_ = 0;
};

} // namespace tabext
