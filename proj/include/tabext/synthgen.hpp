#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tabext {

inline constexpr std::string_view kCorpusSchema = "tabext.corpus/1";

struct IntRange {
    int min = 0;
    int max = 0;

    bool operator==(const IntRange&) const = default;
};

/// Knobs of the synthetic invoice layout. Geometry scales with the page size.
struct LayoutSpec {
    int page_width = 2480; // A4 at 300 dpi
    int page_height = 3508;
    IntRange table_rows{5, 14};
    IntRange table_columns{3, 7};
    bool address = true;
    bool upper_info = true;
    bool total = true;
    bool footer = true;
    int jitter_px = 2;     // at most 2
    double dropout = 0.02; // at most 0.02
    std::uint64_t seed = 7;

    /// Throws InfeasibleSpec for ranges or sizes no layout can satisfy.
    void validate() const;

    bool operator==(const LayoutSpec&) const = default;
};

nlohmann::json to_json(const LayoutSpec& spec);
LayoutSpec layout_spec_from_json(const nlohmann::json& j);

enum class BlockRole { Address, UpperInfo, Table, Total, Footer };

const char* to_string(BlockRole role);

struct GeneratedInvoice {
    std::string doc_id;
    std::string tsv;
    std::vector<int> labels;        // per token, in TSV order; 1 = table element
    std::vector<BlockRole> roles;   // per token
    std::vector<int> table_columns; // per token; column index for table tokens, -1 otherwise
    std::vector<int> column_right_aligned; // per table column
    std::vector<std::string> clean_row_patterns; // table body rows before dropout
    int attempts = 1;
};

/// Builds one invoice. Layouts that break a placement rule after noise are
/// redrawn from a derived seed; InfeasibleSpec if none succeeds.
GeneratedInvoice generate_invoice(const LayoutSpec& spec, const std::string& doc_id = "invoice");

/// Placement rules an invoice must satisfy. Empty when all hold.
std::vector<std::string> check_layout_priors(const GeneratedInvoice& invoice, const LayoutSpec& spec);

/// Writes n invoices (one .tsv each), labels.jsonl with seed labels and
/// manifest.json. Output depends only on (n, spec, seed).
void generate_corpus(std::size_t n, const LayoutSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

} // namespace tabext
