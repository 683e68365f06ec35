#pragma once

// Deterministic synthetic clinical-PII corpus: patient records, the disjoint
// member / non-member split, and a non-clinical general corpus.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace llmceg::synthgen {

struct PiiRecord {
    std::string name;
    int age = 0;
    std::string diagnosis;
    std::string medication;
    long salary = 0;
    std::string ssn;

    bool operator==(const PiiRecord&) const = default;
};

struct SplitCorpus {
    std::vector<std::string> members;
    std::vector<std::string> nonmembers;
    std::vector<std::size_t> member_sources;     // indices into the input record list
    std::vector<std::size_t> nonmember_sources;
    std::uint64_t seed = 0;
};

struct GeneralCorpus {
    std::vector<std::string> sentences;
    std::uint64_t seed = 0;
};

// Built-in word lists.
std::span<const std::string_view> first_names();
std::span<const std::string_view> last_names();
std::span<const std::string_view> diagnoses();
std::span<const std::string_view> medications();

// Lower-cased alphanumeric tokens of the diagnosis and medication lists.
std::vector<std::string> clinical_tokens();
// Lower-cased alphanumeric tokens of a string.
std::vector<std::string> tokenize_words(std::string_view text);

bool is_valid_ssn(std::string_view ssn);
bool is_valid_record(const PiiRecord& r);

std::vector<PiiRecord> generate_records(std::size_t n, std::uint64_t seed);
std::string serialize_record(const PiiRecord& r);

// Throws SizeError when n_members + n_nonmembers exceeds the record count.
SplitCorpus split_corpus(std::span<const PiiRecord> records, std::size_t n_members, std::size_t n_nonmembers,
                         std::uint64_t seed);

GeneralCorpus generate_general_corpus(std::size_t n, std::uint64_t seed);

// Pretraining text: n general sentences from an independent stream, excluding anything in `held_out`.
std::vector<std::string> generate_pretrain_corpus(std::size_t n, std::uint64_t seed,
                                                  std::span<const std::string> held_out);

}  // namespace llmceg::synthgen
