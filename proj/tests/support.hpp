#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "tabext/ingest.hpp"

namespace tabext::testing {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir()
    {
        static int counter = 0;
        std::random_device rd;
        path_ = fs::temp_directory_path()
            / ("tabext-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline Token make_token(std::string text, int left, int top, int width, int height, int block = 1, int line = 1,
    int word = 1, int par = 1)
{
    Token t;
    t.level = 5;
    t.page_num = 1;
    t.block_num = block;
    t.par_num = par;
    t.line_num = line;
    t.word_num = word;
    t.left = left;
    t.top = top;
    t.width = width;
    t.height = height;
    t.conf = 95.0;
    t.text = std::move(text);
    return t;
}

inline std::string page_row(int page, int width, int height)
{
    return "1\t" + std::to_string(page) + "\t0\t0\t0\t0\t0\t0\t" + std::to_string(width) + "\t"
        + std::to_string(height) + "\t-1\t";
}

inline std::string word_row(const Token& t)
{
    std::ostringstream ss;
    ss << "5\t" << t.page_num << '\t' << t.block_num << '\t' << t.par_num << '\t' << t.line_num << '\t'
       << t.word_num << '\t' << t.left << '\t' << t.top << '\t' << t.width << '\t' << t.height << '\t' << t.conf
       << '\t' << t.text;
    return ss.str();
}

/// One-page TSV with the given tokens placed on one line each of the given block.
inline std::string tsv_of(const std::vector<Token>& tokens, int width = 1000, int height = 1400)
{
    std::string out{kTsvHeader};
    out += '\n';
    out += page_row(1, width, height) + '\n';
    for (const auto& t : tokens) {
        out += word_row(t) + '\n';
    }
    return out;
}

/// Partition as a sorted list of sorted member lists; invariant under relabelling.
inline std::vector<std::vector<std::size_t>> canonical_partition(const std::vector<int>& group_of)
{
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < group_of.size(); ++i) {
        members[group_of[i]].push_back(i);
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto& [g, m] : members) {
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Transitive closure of "within tolerance" by repeated pairwise merging.
inline std::vector<int> closure_oracle(const std::vector<int>& coords, int tolerance)
{
    const std::size_t n = coords.size();
    std::vector<int> comp(n);
    std::iota(comp.begin(), comp.end(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (std::abs(coords[i] - coords[j]) <= tolerance && comp[i] != comp[j]) {
                    const int low = std::min(comp[i], comp[j]);
                    comp[i] = comp[j] = low;
                    changed = true;
                }
            }
        }
    }
    return comp;
}

struct OracleClass {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct OracleMetrics {
    OracleClass cls[2];
    double accuracy = 0.0;
    OracleClass macro;
    OracleClass weighted;
};

/// Per-class counting from scratch; undefined ratios are 0.
inline OracleMetrics metrics_oracle(const std::vector<int>& pred, const std::vector<int>& truth)
{
    OracleMetrics m;
    std::size_t correct = 0;
    for (int c = 0; c < 2; ++c) {
        std::size_t hit = 0, predicted = 0, actual = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            hit += pred[i] == c && truth[i] == c;
            predicted += pred[i] == c;
            actual += truth[i] == c;
        }
        correct += hit;
        auto& k = m.cls[c];
        k.precision = predicted ? static_cast<double>(hit) / static_cast<double>(predicted) : 0.0;
        k.recall = actual ? static_cast<double>(hit) / static_cast<double>(actual) : 0.0;
        k.f1 = k.precision + k.recall > 0 ? 2.0 * k.precision * k.recall / (k.precision + k.recall) : 0.0;
        k.support = actual;
    }
    const double n = static_cast<double>(pred.size());
    m.accuracy = static_cast<double>(correct) / n;
    const auto& a = m.cls[0];
    const auto& b = m.cls[1];
    m.macro = {(a.precision + b.precision) / 2.0, (a.recall + b.recall) / 2.0, (a.f1 + b.f1) / 2.0, pred.size()};
    const double sa = static_cast<double>(a.support);
    const double sb = static_cast<double>(b.support);
    m.weighted = {(sa * a.precision + sb * b.precision) / n, (sa * a.recall + sb * b.recall) / n,
        (sa * a.f1 + sb * b.f1) / n, pred.size()};
    return m;
}

/// Row labels of a rendered report: the text before the first run of two spaces
/// on every non-blank line after the column header.
inline std::vector<std::string> rendered_row_labels(const std::string& text)
{
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(' ') == std::string::npos) {
            continue;
        }
        if (!header_seen) {
            header_seen = line.find("precision") != std::string::npos;
            continue;
        }
        rows.push_back(line.substr(0, line.find("  ")));
    }
    return rows;
}

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

#ifdef TABEXT_CLI_PATH
/// Runs the tabext binary with the given argument string; captures stdout and stderr.
inline CommandResult run_cli(const std::string& args, const fs::path& scratch, const std::string& env = {})
{
    const auto out_path = scratch / "cli.stdout";
    const auto err_path = scratch / "cli.stderr";
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + std::string(TABEXT_CLI_PATH) + "\" " + args
        + " >\"" + out_path.string() + "\" 2>\"" + err_path.string() + "\"";
    const int status = std::system(cmd.c_str());
    CommandResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_path);
    r.err = read_file(err_path);
    return r;
}
#endif

} // namespace tabext::testing
