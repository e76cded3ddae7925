#include "tabext/label_store.hpp"

#include <chrono>
#include <ostream>

#include "tabext/error.hpp"

namespace tabext {

namespace {

std::int64_t now_ms()
{
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

} // namespace

const char* to_string(LabelSource source)
{
    return source == LabelSource::Human ? "human" : "seed";
}

LabelSource label_source_from_string(const std::string& s)
{
    if (s == "human") {
        return LabelSource::Human;
    }
    if (s == "seed") {
        return LabelSource::Seed;
    }
    throw Error(ErrorKind::SchemaMismatch, "unknown label source '" + s + "'");
}

nlohmann::json to_json(const LabelRecord& r)
{
    return {
        {"doc_id", r.key.doc_id},
        {"token_index", r.key.token_index},
        {"label", r.label},
        {"source", to_string(r.source)},
        {"revision", r.revision},
        {"timestamp", r.timestamp_ms},
    };
}

LabelRecord label_record_from_json(const nlohmann::json& j)
{
    try {
        LabelRecord r;
        r.key.doc_id = j.at("doc_id").get<std::string>();
        r.key.token_index = j.at("token_index").get<int>();
        r.label = j.at("label").get<int>();
        r.source = label_source_from_string(j.at("source").get<std::string>());
        r.revision = j.at("revision").get<int>();
        r.timestamp_ms = j.at("timestamp").get<std::int64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("label record: ") + e.what());
    }
}

LabelStore::LabelStore(std::filesystem::path path, LabelStoreMode mode)
    : path_(std::move(path))
{
    if (mode == LabelStoreMode::ReadOnly && !std::filesystem::exists(*path_)) {
        throw Error(ErrorKind::Io, "label file " + path_->string() + " does not exist");
    }
    if (std::filesystem::exists(*path_)) {
        std::ifstream in(*path_);
        if (!in) {
            throw Error(ErrorKind::Io, "cannot read " + path_->string());
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) {
                continue;
            }
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorKind::SchemaMismatch,
                    path_->string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
            const auto record = label_record_from_json(j);
            const auto it = entries_.find(record.key);
            if (it != entries_.end() && record.revision <= it->second.latest.revision) {
                throw Error(ErrorKind::SchemaMismatch,
                    path_->string() + ":" + std::to_string(line_no) + ": revision does not increase");
            }
            if (record.label != 0 && record.label != 1) {
                throw Error(ErrorKind::InvalidLabel, path_->string() + ":" + std::to_string(line_no) + ": label not 0/1");
            }
            apply_record(record);
        }
    }
    if (mode == LabelStoreMode::ReadOnly) {
        return;
    }
    log_.open(*path_, std::ios::app);
    if (!log_) {
        throw Error(ErrorKind::Io, "cannot append to " + path_->string());
    }
}

void LabelStore::set_known_tokens(std::map<std::string, int> token_counts)
{
    std::unique_lock lock(mutex_);
    known_tokens_ = std::move(token_counts);
}

void LabelStore::check_writable(const LabelKey& key, int label) const
{
    if (label != 0 && label != 1) {
        throw Error(ErrorKind::InvalidLabel, "label must be 0 or 1, got " + std::to_string(label));
    }
    if (known_tokens_) {
        const auto it = known_tokens_->find(key.doc_id);
        if (it == known_tokens_->end() || key.token_index < 0 || key.token_index >= it->second) {
            throw Error(ErrorKind::UnknownToken,
                "unknown token " + key.doc_id + "#" + std::to_string(key.token_index));
        }
    }
}

void LabelStore::apply_record(const LabelRecord& record)
{
    auto& entry = entries_[record.key];
    entry.latest = record;
    if (record.source == LabelSource::Human) {
        entry.latest_human = record;
    }
    ++generation_;
}

LabelRecord LabelStore::apply(const LabelKey& key, int label, LabelSource source, std::int64_t timestamp_ms)
{
    const auto it = entries_.find(key);
    LabelRecord record{key, label, source, it == entries_.end() ? 1 : it->second.latest.revision + 1, timestamp_ms};
    if (log_.is_open()) {
        log_ << to_json(record).dump() << '\n';
    }
    apply_record(record);
    return record;
}

LabelRecord LabelStore::write(const LabelKey& key, int label, LabelSource source, std::optional<std::int64_t> timestamp_ms)
{
    std::unique_lock lock(mutex_);
    check_writable(key, label);
    auto record = apply(key, label, source, timestamp_ms.value_or(now_ms()));
    if (log_.is_open()) {
        log_.flush();
    }
    return record;
}

std::vector<LabelRecord> LabelStore::write_batch(std::span<const LabelWrite> writes, LabelSource source,
    std::optional<std::int64_t> timestamp_ms)
{
    std::unique_lock lock(mutex_);
    for (const auto& w : writes) {
        check_writable(w.key, w.label);
    }
    const auto ts = timestamp_ms.value_or(now_ms());
    std::vector<LabelRecord> out;
    out.reserve(writes.size());
    for (const auto& w : writes) {
        out.push_back(apply(w.key, w.label, source, ts));
    }
    if (log_.is_open()) {
        log_.flush();
        if (!log_) {
            throw Error(ErrorKind::Io, "failed to append to " + path_->string());
        }
    }
    return out;
}

std::optional<LabelRecord> LabelStore::read(const LabelKey& key) const
{
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second.latest;
}

std::optional<LabelRecord> LabelStore::human(const LabelKey& key) const
{
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second.latest_human;
}

std::optional<LabelRecord> LabelStore::effective(const LabelKey& key) const
{
    std::shared_lock lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second.latest_human ? *it->second.latest_human : it->second.latest;
}

std::vector<LabelRecord> LabelStore::export_records() const
{
    std::shared_lock lock(mutex_);
    std::vector<LabelRecord> out;
    out.reserve(entries_.size());
    for (const auto& [key, entry] : entries_) {
        out.push_back(entry.latest_human ? *entry.latest_human : entry.latest);
    }
    return out;
}

void LabelStore::export_jsonl(std::ostream& out) const
{
    for (const auto& record : export_records()) {
        out << to_json(record).dump() << '\n';
    }
}

std::size_t LabelStore::size() const
{
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::uint64_t LabelStore::generation() const
{
    std::shared_lock lock(mutex_);
    return generation_;
}

} // namespace tabext
