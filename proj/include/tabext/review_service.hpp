#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "tabext/label_store.hpp"

namespace tabext {

inline constexpr std::string_view kReviewSchema = "tabext.review/1";
inline constexpr int kDefaultReviewPort = 8970;

struct ReviewOptions {
    std::filesystem::path corpus_dir;
    std::optional<std::filesystem::path> checkpoint;
    std::filesystem::path labels_path;
    std::optional<std::filesystem::path> static_dir;
    /// Where /export-training-set writes; defaults to <corpus_dir>/exports.
    std::optional<std::filesystem::path> export_dir;
    std::optional<double> threshold;
    std::optional<int> tolerance;
};

/// HTTP front end of the correction loop.
///
///   GET  /documents                  -> document list with review progress
///   GET  /documents/{id}/tokens      -> tokens, predictions and human labels
///   POST /documents/{id}/labels      -> [{token_index, label}] corrections
///   POST /export-training-set        -> writes the effective label set
///
/// Corpus files are read once at start-up and never written. The only
/// mutable state is the label store.
class ReviewService {
public:
    explicit ReviewService(ReviewOptions options);
    ~ReviewService();

    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    /// Binds to host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);

    /// Serves until stop(); call after bind().
    void run();

    void stop();

    /// Blocks until run() accepts connections.
    void wait_until_ready() const;

    const LabelStore& labels() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace tabext
