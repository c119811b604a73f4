#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "symptomrank/corpus.hpp"
#include "symptomrank/questionnaire.hpp"
#include "test_util.hpp"

using namespace symptomrank;

namespace {

std::vector<SentenceRecord> parse(const std::string& s) {
  std::istringstream in(s);
  return parse_trec_corpus(in);
}

LabeledInstance lab(std::string doc, SymptomId s, bool maj, bool unan) { return {std::move(doc), s, maj, unan, false}; }

}  // namespace

TEST(Text, TrimSplitAndNumbers) {
  EXPECT_EQ(text::trim("  a b \t\n"), "a b");
  EXPECT_EQ(text::split("a\tb\t", '\t').size(), 3u);
  EXPECT_EQ(text::parse_int<int>("42"), 42);
  EXPECT_FALSE(text::parse_int<int>("4x"));
  EXPECT_EQ(text::parse_double("0.25"), 0.25);
  EXPECT_FALSE(text::parse_double(""));
  EXPECT_EQ(text::format_fixed(0.9123454, 6), "0.912345");
  EXPECT_EQ(text::parse_double(text::format_exact(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Text, EscapeRoundTrip) {
  const std::string s = "tab\there\nnew \\ line";
  EXPECT_EQ(text::unescape_field(text::escape_field(s)), s);
  EXPECT_EQ(text::escape_field(s).find('\t'), std::string::npos);
}

TEST(Trec, MinimalDocument) {
  const auto r = parse("<DOC><DOCNO>s1</DOCNO><TEXT>I'm sad</TEXT></DOC>");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].doc_id, "s1");
  EXPECT_EQ(r[0].text, "I'm sad");
  EXPECT_FALSE(r[0].pre);
  EXPECT_FALSE(r[0].post);
}

TEST(Trec, ContextFieldsAndTrimming) {
  const auto r = parse("<DOC>\n <DOCNO> s2 </DOCNO>\n<PRE>a</PRE>\n<TEXT>\n  body text \n</TEXT><POST>b</POST>\n</DOC>\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].doc_id, "s2");
  EXPECT_EQ(r[0].text, "body text");
  EXPECT_EQ(r[0].pre, "a");
  EXPECT_EQ(r[0].post, "b");
}

TEST(Trec, UnknownElementsIgnored) {
  const auto r = parse("<DOC><DOCNO>x</DOCNO><USER>u1</USER><TEXT>t</TEXT></DOC>");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].text, "t");
}

TEST(Trec, MissingTextNamesOrdinal) {
  try {
    parse("<DOC><DOCNO>a</DOCNO><TEXT>x</TEXT></DOC>\n<DOC><DOCNO>b</DOCNO></DOC>");
    FAIL() << "expected a parse error";
  } catch (const TrecParseError& e) {
    EXPECT_EQ(e.ordinal(), 2u);
    EXPECT_NE(std::string(e.what()).find("missing <TEXT>"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("doc #2"), std::string::npos);
  }
}

TEST(Trec, MalformedInputs) {
  EXPECT_THROW(parse("<DOC><TEXT>x</TEXT></DOC>"), TrecParseError);
  EXPECT_THROW(parse("<DOC><DOCNO>a</DOCNO><TEXT>x</DOC>"), TrecParseError);
  EXPECT_THROW(parse("<DOC><DOCNO>a</DOCNO><TEXT>x</TEXT>"), TrecParseError);
  EXPECT_THROW(parse("<DOC><DOCNO>a</DOCNO><TEXT>  </TEXT></DOC>"), TrecParseError);
  EXPECT_THROW(parse("junk"), TrecParseError);
}

TEST(Trec, UnclosedTagReportsOffset) {
  const std::string doc = "<DOC><DOCNO>a</DOCNO><TEXT>x</TEXT></DOC>";
  try {
    parse(doc + "<DOC><DOCNO>b</DOCNO><TEXT>never closed");
    FAIL();
  } catch (const TrecParseError& e) {
    EXPECT_EQ(e.ordinal(), 2u);
    EXPECT_GT(e.offset(), doc.size());
  }
}

TEST(Trec, DuplicateIdListsBothOrdinals) {
  try {
    parse("<DOC><DOCNO>a</DOCNO><TEXT>x</TEXT></DOC><DOC><DOCNO>b</DOCNO><TEXT>y</TEXT></DOC>"
          "<DOC><DOCNO>a</DOCNO><TEXT>z</TEXT></DOC>");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("#1 and #3"), std::string::npos) << e.what();
  }
}

TEST(Trec, StreamingReaderYieldsInOrder) {
  std::istringstream in("<DOC><DOCNO>1</DOCNO><TEXT>a</TEXT></DOC><DOC><DOCNO>2</DOCNO><TEXT>b</TEXT></DOC>");
  TrecReader reader(in);
  EXPECT_EQ(reader.next()->doc_id, "1");
  EXPECT_EQ(reader.next()->doc_id, "2");
  EXPECT_FALSE(reader.next());
  EXPECT_EQ(reader.documents_read(), 2u);
}

TEST(Trec, WriteParseRoundTrip) {
  std::vector<SentenceRecord> recs = {{"a", "I'm sad", std::nullopt, std::nullopt},
                                      {"b", "Ünïcödé text…", std::string("before"), std::string("after")},
                                      {"c", "x", std::nullopt, std::string("only post")}};
  std::ostringstream out;
  write_trec_corpus(out, recs);
  EXPECT_EQ(parse(out.str()), recs);
}

TEST(Normalize, DuplicatePairCollapses) {
  EXPECT_EQ(normalize_text("I'm sad").key, "i'm sad");
  EXPECT_EQ(normalize_text("i'm sad.").key, "i'm sad");
  EXPECT_EQ(normalize_text("  HELLO   World!! ").key, "hello world");
}

TEST(Normalize, UnicodeCaseAndSpaces) {
  EXPECT_EQ(normalize_text("ÉTÉ À PARIS…").key, "été à paris");
  EXPECT_EQ(normalize_text("Ωmega?!...").key, "ωmega");
  EXPECT_EQ(normalize_text("...").key, "");
}

TEST(Normalize, IdempotentOnRandomStrings) {
  std::mt19937 gen(5);
  const std::vector<std::string> pieces = {"A", "b", " ", "\t", ".", "!", "?", "…", "É", "ß", " ", "x", "Z", "\xFF"};
  for (int iter = 0; iter < 2000; ++iter) {
    std::string s;
    const int len = int(gen() % 12);
    for (int i = 0; i < len; ++i) s += pieces[gen() % pieces.size()];
    const auto once = normalize_text(s).key;
    EXPECT_EQ(normalize_text(once).key, once) << s;
    EXPECT_EQ(text::trim(once), once);
  }
}

TEST(Dedup, MajorityVoteTieGoesNegative) {
  std::vector<SentenceRecord> recs = {{"a", "I'm sad", {}, {}}, {"b", "i'm sad.", {}, {}}};
  const auto r = dedup_with_reconciliation(recs, {lab("a", 1, true, true), lab("b", 1, true, false)});
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].doc_id, "a");
  ASSERT_EQ(r.labels.size(), 1u);
  EXPECT_TRUE(r.labels[0].majority);
  EXPECT_FALSE(r.labels[0].unanimity);
  EXPECT_EQ(r.merged_into.at("b"), "a");
}

TEST(Dedup, TwoOfThreeVote) {
  std::vector<SentenceRecord> recs = {{"a", "x", {}, {}}, {"b", "X!", {}, {}}, {"c", "x?", {}, {}}};
  const auto r = dedup_with_reconciliation(
      recs, {lab("a", 2, true, false), lab("b", 2, false, false), lab("c", 2, true, false)});
  ASSERT_EQ(r.labels.size(), 1u);
  EXPECT_TRUE(r.labels[0].majority);
}

TEST(Dedup, UnlabeledPassThroughAndUnlabeledDuplicatesDoNotVote) {
  std::vector<SentenceRecord> recs = {{"a", "alone", {}, {}}, {"b", "dup", {}, {}}, {"c", "DUP", {}, {}}};
  const auto r = dedup_with_reconciliation(recs, {lab("b", 3, true, true)});
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0], recs[0]);
  ASSERT_EQ(r.labels.size(), 1u);
  EXPECT_TRUE(r.labels[0].unanimity);
}

TEST(Dedup, UnknownDocRejected) {
  std::vector<SentenceRecord> recs = {{"a", "x", {}, {}}};
  EXPECT_THROW(dedup_with_reconciliation(recs, {lab("zz", 1, false, false)}), ValidationError);
}

TEST(Dedup, KeysUniqueAndOrderStable) {
  std::mt19937 gen(11);
  std::vector<SentenceRecord> recs;
  for (int i = 0; i < 300; ++i) {
    std::string t = "sentence " + std::to_string(gen() % 80);
    if (gen() % 2) t[0] = 'S';
    if (gen() % 3 == 0) t += ".";
    recs.push_back({"d" + std::to_string(i), t, {}, {}});
  }
  const auto r = dedup_with_reconciliation(recs, {});
  std::set<std::string> keys;
  for (const auto& k : r.records) EXPECT_TRUE(keys.insert(normalize_text(k.text).key).second);
  std::size_t pos = 0;
  for (const auto& k : r.records) {
    while (recs[pos].doc_id != k.doc_id) ++pos;  // kept records form a subsequence of the input
    ASSERT_LT(pos, recs.size());
  }
}

TEST(Questionnaire, BundledFileLoads) {
  auto in = io::open_input(testing_util::data_dir() / "bdi2.txt");
  const auto q = load_questionnaire(in);
  ASSERT_EQ(q.symptoms().size(), 21u);
  const auto& s = q.at(1);
  EXPECT_EQ(s.name, "Sadness");
  EXPECT_EQ(s.options[0], "I do not feel sad.");
  EXPECT_EQ(s.options[1], "I feel sad much of the time.");
  EXPECT_EQ(s.options[2], "I am sad all the time.");
  EXPECT_EQ(s.options[3], "I am so sad or unhappy that I can't stand it.");
  EXPECT_EQ(q.at(10).name, "Crying");
}

TEST(Questionnaire, RoundTrip) {
  auto in = io::open_input(testing_util::data_dir() / "bdi2.txt");
  const auto q = load_questionnaire(in);
  std::stringstream ss;
  write_questionnaire(ss, q);
  const auto again = load_questionnaire(ss);
  for (int s = 1; s <= 21; ++s) {
    EXPECT_EQ(again.at(s).name, q.at(s).name);
    EXPECT_EQ(again.at(s).options, q.at(s).options);
  }
}

TEST(Questionnaire, WrongCountsRejected) {
  auto in = io::open_input(testing_util::data_dir() / "bdi2.txt");
  const auto full = io::read_file(testing_util::data_dir() / "bdi2.txt");

  // Drop the last item: 20 symptoms.
  const auto cut = full.substr(0, full.find("item 21:"));
  std::istringstream twenty(cut);
  try {
    load_questionnaire(twenty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("expected 21 symptoms"), std::string::npos) << e.what();
  }

  // Remove one option line of item 4.
  auto three = full;
  const auto at = three.find("item 4:");
  const auto opt = three.find("  3:", at);
  three.erase(opt, three.find('\n', opt) - opt + 1);
  std::istringstream bad(three);
  try {
    load_questionnaire(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("symptom 4"), std::string::npos) << e.what();
  }
}
