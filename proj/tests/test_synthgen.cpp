#include <algorithm>
#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "llmceg/errors.hpp"
#include "llmceg/synthgen.hpp"

using namespace llmceg;
using namespace llmceg::synthgen;

TEST(Records, ZeroCountIsEmpty) { EXPECT_TRUE(generate_records(0, 42).empty()); }

TEST(Records, Deterministic) { EXPECT_EQ(generate_records(500, 42), generate_records(500, 42)); }

TEST(Records, SeedChangesOutput) { EXPECT_NE(generate_records(50, 42), generate_records(50, 43)); }

TEST(Records, FieldFormats) {
    const auto recs = generate_records(500, 42);
    ASSERT_EQ(recs.size(), 500u);
    const std::regex ssn_re(R"(^(\d{3})-(\d{2})-(\d{4})$)");
    std::set<std::string> ssns;
    for (const auto& r : recs) {
        EXPECT_TRUE(is_valid_record(r));
        std::smatch m;
        ASSERT_TRUE(std::regex_match(r.ssn, m, ssn_re)) << r.ssn;
        const int area = std::stoi(m[1]);
        EXPECT_NE(area, 0);
        EXPECT_NE(area, 666);
        EXPECT_LT(area, 900);
        EXPECT_NE(std::stoi(m[2]), 0);
        EXPECT_NE(std::stoi(m[3]), 0);
        EXPECT_GE(r.age, 18);
        EXPECT_LE(r.age, 90);
        EXPECT_GT(r.salary, 0);
        EXPECT_NE(r.name.find(' '), std::string::npos);
        EXPECT_NE(std::find(diagnoses().begin(), diagnoses().end(), r.diagnosis), diagnoses().end());
        EXPECT_NE(std::find(medications().begin(), medications().end(), r.medication), medications().end());
        ssns.insert(r.ssn);
    }
    EXPECT_EQ(ssns.size(), recs.size());
}

TEST(Records, TooManyRejected) { EXPECT_THROW(generate_records(1'000'000, 1), SizeError); }

TEST(Ssn, Validator) {
    EXPECT_TRUE(is_valid_ssn("123-45-6789"));
    EXPECT_FALSE(is_valid_ssn("123456789"));
    EXPECT_FALSE(is_valid_ssn("123-456-789"));
    EXPECT_FALSE(is_valid_ssn("12a-45-6789"));
    EXPECT_FALSE(is_valid_ssn("123-45-67890"));
    EXPECT_FALSE(is_valid_ssn(""));
}

TEST(Serialize, ExampleSentencePrefix) {
    const PiiRecord r{"Jennifer Walsh", 34, "Type 2 Diabetes", "Metformin", 85000, "123-45-6789"};
    const std::string s = serialize_record(r);
    EXPECT_EQ(s.rfind("Patient Jennifer Walsh, aged 34, has been diagnosed with Type 2 Diabetes and is prescribed "
                      "Metformin",
                      0),
              0u);
    EXPECT_NE(s.find("123-45-6789"), std::string::npos);
    EXPECT_NE(s.find("85000"), std::string::npos);
}

TEST(Serialize, ContainsSsnAndSalary) {
    for (const auto& r : generate_records(100, 3)) {
        const std::string s = serialize_record(r);
        EXPECT_NE(s.find(r.ssn), std::string::npos);
        EXPECT_NE(s.find(std::to_string(r.salary)), std::string::npos);
    }
}

TEST(Serialize, SsnDistinguishesSentences) {
    PiiRecord a{"Ann Lee", 40, "Asthma", "Albuterol", 50000, "111-22-3333"};
    PiiRecord b = a;
    b.ssn = "111-22-3334";
    EXPECT_NE(serialize_record(a), serialize_record(b));
}

TEST(Split, DefaultSizesDisjoint) {
    const auto recs = generate_records(500, 42);
    const auto split = split_corpus(recs, 300, 200, 42);
    ASSERT_EQ(split.members.size(), 300u);
    ASSERT_EQ(split.nonmembers.size(), 200u);
    std::set<std::size_t> m(split.member_sources.begin(), split.member_sources.end());
    for (std::size_t i : split.nonmember_sources) EXPECT_EQ(m.count(i), 0u);
    std::set<std::string> ms(split.members.begin(), split.members.end());
    for (const auto& s : split.nonmembers) EXPECT_EQ(ms.count(s), 0u);
    for (std::size_t i = 0; i < split.members.size(); ++i)
        EXPECT_EQ(split.members[i], serialize_record(recs[split.member_sources[i]]));
}

TEST(Split, TwoRecords) {
    const auto recs = generate_records(2, 9);
    const auto split = split_corpus(recs, 1, 1, 9);
    ASSERT_EQ(split.members.size(), 1u);
    ASSERT_EQ(split.nonmembers.size(), 1u);
    EXPECT_NE(split.members[0], split.nonmembers[0]);
}

TEST(Split, Deterministic) {
    const auto recs = generate_records(100, 5);
    const auto a = split_corpus(recs, 60, 40, 5);
    const auto b = split_corpus(recs, 60, 40, 5);
    EXPECT_EQ(a.members, b.members);
    EXPECT_EQ(a.nonmembers, b.nonmembers);
}

TEST(Split, OversizeRejected) {
    const auto recs = generate_records(10, 5);
    EXPECT_THROW(split_corpus(recs, 6, 5, 5), SizeError);
}

TEST(General, NoClinicalVocabulary) {
    const auto g = generate_general_corpus(50, 42);
    ASSERT_EQ(g.sentences.size(), 50u);
    const auto clinical = clinical_tokens();
    const std::set<std::string> vocab(clinical.begin(), clinical.end());
    for (const auto& s : g.sentences)
        for (const auto& w : tokenize_words(s)) EXPECT_EQ(vocab.count(w), 0u) << w << " in: " << s;
}

TEST(General, ZeroIsEmpty) { EXPECT_TRUE(generate_general_corpus(0, 1).sentences.empty()); }

TEST(General, Deterministic) {
    EXPECT_EQ(generate_general_corpus(30, 7).sentences, generate_general_corpus(30, 7).sentences);
}

TEST(Pretrain, ExcludesHeldOutAndClinicalWords) {
    const auto held = generate_general_corpus(50, 42);
    const auto pre = generate_pretrain_corpus(500, 42, held.sentences);
    ASSERT_EQ(pre.size(), 500u);
    const std::set<std::string> held_set(held.sentences.begin(), held.sentences.end());
    const auto clinical = clinical_tokens();
    const std::set<std::string> vocab(clinical.begin(), clinical.end());
    for (const auto& s : pre) {
        EXPECT_EQ(held_set.count(s), 0u);
        for (const auto& w : tokenize_words(s)) EXPECT_EQ(vocab.count(w), 0u);
    }
}

TEST(Tokenize, LowerAlnumRuns) {
    EXPECT_EQ(tokenize_words("Type 2 Diabetes, ok!"), (std::vector<std::string>{"type", "2", "diabetes", "ok"}));
}
