// Writes the bundled toy fixture: a 200-sentence corpus with case/punctuation
// duplicates, labels for every (sentence, symptom) pair, random embeddings
// clustered around the option vectors, three regression score tables, F1 and
// qrels files, a mock oracle script and a config tying them together.
//
//   make_toy_fixture <output-dir>

#include <array>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "symptomrank/symptomrank.hpp"

namespace fs = std::filesystem;
using namespace symptomrank;

namespace {

constexpr std::size_t kDim = 32;
constexpr int kPerSymptom = 9;  // 7 unanimous + 2 majority-only positives
constexpr int kDuplicates = 10;

// Three first-person stems per symptom, in questionnaire order.
const std::array<std::array<const char*, 3>, kNumSymptoms> kStems = {{
    {"I feel so sad", "I am unhappy", "everything makes me feel down"},
    {"I have no hope for my future", "I expect things to only get worse", "I feel discouraged about what comes next"},
    {"I have failed at everything", "I look back and see a lot of failures", "I am a failure as a person"},
    {"nothing gives me pleasure anymore", "I don't enjoy the things I used to", "I can't get any joy out of life"},
    {"I feel guilty over things I did", "I keep feeling guilty", "I feel guilty all of the time"},
    {"I feel I am being punished", "I expect to be punished", "I deserve to be punished"},
    {"I am disappointed in myself", "I dislike myself", "I hate myself"},
    {"I blame myself for everything", "I criticize myself for all of my faults", "I am more critical of myself than before"},
    {"I have thoughts of killing myself", "I would like to end my life", "I think about not being alive"},
    {"I cry over every little thing", "I feel like crying but I can't", "I cry more than I used to"},
    {"I am so restless I have to keep moving", "I feel agitated and wound up", "I can't stay still"},
    {"I have lost interest in other people", "I am less interested in things", "it is hard to get interested in anything"},
    {"I can't make decisions", "I find it hard to decide anything", "every choice is too much for me"},
    {"I feel worthless", "I don't consider myself worthwhile", "I feel more worthless than other people"},
    {"I have no energy", "I don't have enough energy to do much", "I have less energy than I used to"},
    {"I sleep most of the day", "I wake up hours too early and can't get back to sleep", "I can't sleep at night"},
    {"I am irritable all the time", "I am more irritable than usual", "I get annoyed so easily"},
    {"I have no appetite at all", "I crave food all the time", "my appetite is much less than before"},
    {"I can't concentrate on anything", "it's hard to keep my mind on anything", "I find I can't focus"},
    {"I am too tired to do anything", "I get fatigued more easily than I used to", "I feel tired all the time"},
    {"I have lost interest in sex", "I am much less interested in sex now", "sex just doesn't interest me"},
}};
const std::array<const char*, 3> kTails = {"lately", "these days", "and I don't know why"};

struct Rng {
  std::mt19937_64 gen{20240917};
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> unit{0.0, 1.0};

  std::vector<float> gaussian(double scale) {
    std::vector<float> v(kDim);
    for (auto& x : v) x = float(scale * normal(gen));
    return v;
  }
};

std::vector<float> add(const std::vector<float>& a, const std::vector<float>& b) {
  std::vector<float> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

float round4(double x) { return float(std::round(x * 1e4) / 1e4); }

std::string doc_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%03d", i);
  return buf;
}

// Case and punctuation variants that normalize to the same key.
std::string variant(const std::string& text, int i) {
  std::string v = text;
  switch (i % 3) {
    case 0:
      for (auto& ch : v) ch = char(std::toupper(static_cast<unsigned char>(ch)));
      break;
    case 1:
      v.pop_back();
      v += "!!";
      break;
    default:
      v.pop_back();
      v += "...";
      break;
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_fixture <output-dir>\n";
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir);
  Rng rng;

  std::array<std::vector<float>, kNumSymptoms> base;
  for (auto& b : base) b = rng.gaussian(1.0);

  EmbeddingStore options(kDim);
  for (int s = 1; s <= kNumSymptoms; ++s)
    for (int i = 0; i < kOptionsPerSymptom; ++i)
      options.add(option_vector_id(s, i), add(base[std::size_t(s - 1)], rng.gaussian(0.3)));

  struct Doc {
    SentenceRecord rec;
    SymptomId home = 0;  // 0: neutral
    bool unanimous = false;
    std::vector<float> vec;
  };
  std::vector<Doc> docs;
  int next = 1;
  for (int s = 1; s <= kNumSymptoms; ++s)
    for (int j = 0; j < kPerSymptom; ++j) {
      Doc d;
      d.rec.doc_id = doc_id(next++);
      std::string text = std::string(kStems[std::size_t(s - 1)][std::size_t(j % 3)]) + " " + kTails[std::size_t(j / 3)];
      text[0] = char(std::toupper(static_cast<unsigned char>(text[0])));
      // A hedged variant the mock oracle grades as non-relevant.
      if (j == 4) text += ", sometimes";
      d.rec.text = text + ".";
      d.home = s;
      d.unanimous = j < 7;
      d.vec = add(base[std::size_t(s - 1)], rng.gaussian(d.unanimous ? 0.8 : 1.1));
      docs.push_back(std::move(d));
    }
  {
    Doc d;
    d.rec.doc_id = doc_id(next++);
    d.rec.text = "We went to the lake on Saturday.";
    d.vec = rng.gaussian(1.0);
    docs.push_back(std::move(d));
  }
  for (std::size_t i = 0; i + 1 < docs.size(); ++i)
    if (i % 7 == 3) {
      docs[i].rec.pre = docs[i - 1].rec.text;
      docs[i].rec.post = docs[i + 1].rec.text;
    }
  const std::size_t distinct = docs.size();
  for (int i = 0; i < kDuplicates; ++i) {
    auto d = docs[std::size_t(i) * 19];
    d.rec.doc_id = doc_id(next++);
    d.rec.text = variant(d.rec.text, i);
    d.rec.pre.reset();
    d.rec.post.reset();
    d.vec = add(d.vec, rng.gaussian(0.01));
    docs.push_back(std::move(d));
  }

  std::vector<SentenceRecord> records;
  std::vector<LabeledInstance> labels;
  EmbeddingStore sentences(kDim);
  for (const auto& d : docs) {
    records.push_back(d.rec);
    sentences.add(d.rec.doc_id, d.vec);
    for (int s = 1; s <= kNumSymptoms; ++s) {
      const bool pos = d.home == s;
      labels.push_back({d.rec.doc_id, s, pos, pos && d.unanimous, false});
    }
  }

  // Regression-style scores: positives mostly above 0.5, a few misses and
  // false alarms, all three tables correlated but distinct.
  ScoreTable mix23{"mix23", {}}, one{"mix23-aug-1step", {}}, two{"mix23-aug-2step", {}};
  for (const auto& d : docs)
    for (int s = 1; s <= kNumSymptoms; ++s) {
      const bool pos = d.home == s;
      const double centre = pos ? (d.unanimous ? 0.75 : 0.55) : 0.05;
      for (auto* t : {&mix23, &one, &two}) {
        const double noise = pos ? 0.2 * rng.normal(rng.gen) : 0.18 * std::abs(rng.normal(rng.gen));
        t->set(s, d.rec.doc_id, round4(std::clamp(centre + noise, 0.0, 1.0)));
      }
    }

  F1Table f1;
  for (int s = 1; s <= kNumSymptoms; ++s) {
    const double a = round4(0.7 + 0.25 * rng.unit(rng.gen));
    const double b = s % 5 == 0 ? a : round4(0.7 + 0.25 * rng.unit(rng.gen));
    f1.values[{s, "mix23-aug-1step"}] = a;
    f1.values[{s, "mix23-aug-2step"}] = b;
  }

  Qrels qmaj{Setting::majority, {}}, qunan{Setting::unanimity, {}};
  for (std::size_t i = 0; i < distinct; ++i)
    for (int s = 1; s <= kNumSymptoms; ++s) {
      const auto& d = docs[i];
      qmaj.judgments[s][d.rec.doc_id] = d.home == s;
      qunan.judgments[s][d.rec.doc_id] = d.home == s && d.unanimous;
    }

  auto write = [&](const char* name, auto&& fn) { io::write_atomically(dir / name, fn); };
  write("corpus.trec", [&](std::ostream& o) { write_trec_corpus(o, records); });
  write("labels.tsv", [&](std::ostream& o) { write_labels(o, labels); });
  write("embeddings.txt", [&](std::ostream& o) { write_embeddings_text(o, sentences); });
  write("options.txt", [&](std::ostream& o) { write_embeddings_text(o, options); });
  write("scores_mix23.tsv", [&](std::ostream& o) { write_score_table(o, mix23); });
  write("scores_aug_1step.tsv", [&](std::ostream& o) { write_score_table(o, one); });
  write("scores_aug_2step.tsv", [&](std::ostream& o) { write_score_table(o, two); });
  write("val_f1.tsv", [&](std::ostream& o) { write_f1_table(o, f1); });
  write("qrels_majority.txt", [&](std::ostream& o) { write_qrels(o, qmaj); });
  write("qrels_unanimity.txt", [&](std::ostream& o) { write_qrels(o, qunan); });
  write("mock_oracle.txt", [&](std::ostream& o) {
    o << "# Scripted oracle for the toy fixture: a sentence is relevant to an item\n"
         "# when it uses one of that item's stems, unless it is hedged.\n"
         "contains:sometimes\t[0]\n"
         "contains:Saturday\tNon-relevant. [0]\n";
    for (int s = 1; s <= kNumSymptoms; ++s)
      for (const auto* stem : kStems[std::size_t(s - 1)]) {
        std::string needle = stem;
        needle = needle.substr(1);  // skip the first letter, whose case varies
        o << "when:" << s << ":" << needle << "\t[1]\n";
      }
    o << "default\t[0]\n";
  });
  write("toy.conf", [&](std::ostream& o) {
    o << "# Toy pipeline: 200 sentences, random 32-d embeddings, mock oracle.\n"
         "[paths]\n"
         "corpus = corpus.trec\n"
         "questionnaire = ../bdi2.txt\n"
         "labels = labels.tsv\n"
         "embeddings = embeddings.txt\n"
         "option_embeddings = options.txt\n"
         "scores_mix23 = scores_mix23.tsv\n"
         "scores_aug_1step = scores_aug_1step.tsv\n"
         "scores_aug_2step = scores_aug_2step.tsv\n"
         "val_f1 = val_f1.tsv\n"
         "qrels_majority = qrels_majority.txt\n"
         "qrels_unanimity = qrels_unanimity.txt\n"
         "mock_script = mock_oracle.txt\n"
         "output_dir = out\n"
         "\n"
         "[split]\n"
         "seed = 42\n"
         "train_fraction = 0.8\n"
         "\n"
         "[oracle]\n"
         "backend = mock\n"
         "k = 5\n"
         "target = unanimity\n"
         "max_in_flight = 4\n"
         "initial_delay_ms = 0\n"
         "\n"
         "[score]\n"
         "threads = 2\n"
         "\n"
         "[runs]\n"
         "cap = 1000\n";
  });
  std::cout << "wrote " << records.size() << " sentences (" << kDuplicates << " duplicates), " << labels.size()
            << " labels to " << dir << '\n';
  return 0;
}
