#include "qsgan/genomics.hpp"
#include <cctype>
#include <cstdio>

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace qsgan::genomics {

int section_of(int pos) {
  for (size_t s = 0; s < kFrequencySections.size(); ++s)
    if (pos >= kFrequencySections[s].first && pos <= kFrequencySections[s].second)
      return static_cast<int>(s) + 1;
  fail(ErrorKind::BadShape, "position outside the spike fragment: " + std::to_string(pos));
}

std::vector<FastaRecord> read_fasta(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<FastaRecord> records;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      FastaRecord rec;
      const auto sp = line.find_first_of(" \t");
      rec.id = line.substr(1, sp == std::string::npos ? std::string::npos : sp - 1);
      records.push_back(std::move(rec));
    } else {
      if (records.empty()) fail(ErrorKind::Io, path + ": sequence data before any header");
      for (char& c : line) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      records.back().seq += line;
    }
  }
  if (records.empty()) fail(ErrorKind::Io, path + ": no FASTA records");
  return records;
}

void write_fasta(const std::string& path, const std::vector<FastaRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  for (const FastaRecord& rec : records) {
    os << '>' << rec.id << '\n';
    for (size_t i = 0; i < rec.seq.size(); i += 70) os << rec.seq.substr(i, 70) << '\n';
  }
}

std::string extract_window(const std::string& aligned, const std::string& reference_aligned,
                           int start, int end) {
  if (aligned.size() != reference_aligned.size())
    fail(ErrorKind::LengthMismatch, "sequence is not aligned to the reference row");
  std::string out;
  out.reserve(end - start + 1);
  int coord = 0;  // reference coordinate of the current column
  for (size_t col = 0; col < reference_aligned.size() && coord < end; ++col) {
    if (reference_aligned[col] == '-') continue;  // insertion column
    ++coord;
    if (coord >= start) out.push_back(aligned[col]);
  }
  if (static_cast<int>(out.size()) != end - start + 1)
    fail(ErrorKind::WindowNotCovered,
         "alignment covers only " + std::to_string(coord) + " reference positions");
  return out;
}

std::string intercept_spike(const AlignedGenome& g, const std::string& reference_aligned) {
  return extract_window(g.bases, reference_aligned, kSpikeStart, kSpikeEnd);
}

const char* to_string(KeptKind k) {
  switch (k) {
    case KeptKind::Mutated: return "mutated";
    case KeptKind::Neighbor: return "neighbor";
    case KeptKind::Random: return "random";
  }
  return "?";
}

KeptKind kept_kind_from_string(const std::string& s) {
  if (s == "mutated") return KeptKind::Mutated;
  if (s == "neighbor") return KeptKind::Neighbor;
  if (s == "random") return KeptKind::Random;
  fail(ErrorKind::Io, "unknown kept-position kind: " + s);
}

std::vector<KeptPosition> compress_positions(const std::vector<std::string>& fragments,
                                             const std::string& reference, std::uint64_t seed) {
  if (static_cast<int>(reference.size()) != kSpikeLength)
    fail(ErrorKind::LengthMismatch, "reference fragment must have length 3822");
  for (const std::string& f : fragments)
    if (f.size() != reference.size())
      fail(ErrorKind::LengthMismatch, "fragment length differs from the reference");

  std::vector<char> chosen(kSpikeLength + 1, 0);  // 0 free, 1 mutated, 2 neighbor, 3 random
  for (int pos = 1; pos <= kSpikeLength; ++pos)
    for (const std::string& f : fragments)
      if (f[pos - 1] != reference[pos - 1]) {
        chosen[pos] = 1;
        break;
      }
  for (int pos = 1; pos <= kSpikeLength; ++pos) {
    if (chosen[pos] != 1) continue;
    if (pos > 1 && chosen[pos - 1] == 0) chosen[pos - 1] = 2;
    if (pos < kSpikeLength && chosen[pos + 1] == 0) chosen[pos + 1] = 2;
  }
  long long taken = std::count_if(chosen.begin(), chosen.end(), [](char c) { return c != 0; });
  if (taken > kCompressedLength)
    fail(ErrorKind::TooManyMutations, "mutated loci and neighbors exceed 1024 (" +
                                          std::to_string(taken) + ")");

  std::vector<int> free_positions;
  for (int pos = 1; pos <= kSpikeLength; ++pos)
    if (chosen[pos] == 0) free_positions.push_back(pos);
  Rng rng(seed);
  while (taken < kCompressedLength) {
    const size_t idx = static_cast<size_t>(rng.below(free_positions.size()));
    chosen[free_positions[idx]] = 3;
    free_positions.erase(free_positions.begin() + static_cast<long long>(idx));
    ++taken;
  }

  std::vector<KeptPosition> kept;
  kept.reserve(kCompressedLength);
  for (int pos = 1; pos <= kSpikeLength; ++pos) {
    if (chosen[pos] == 0) continue;
    KeptPosition kp;
    kp.pos = pos;
    kp.kind = chosen[pos] == 1   ? KeptKind::Mutated
              : chosen[pos] == 2 ? KeptKind::Neighbor
                                 : KeptKind::Random;
    kept.push_back(kp);
  }
  return kept;
}

RVec mutation_vector(const std::string& fragment, const std::string& reference,
                     const std::vector<KeptPosition>& kept) {
  if (fragment.size() != reference.size())
    fail(ErrorKind::LengthMismatch, "fragment length differs from the reference");
  RVec v = RVec::Zero(static_cast<long long>(kept.size()));
  for (size_t i = 0; i < kept.size(); ++i) {
    const int pos = kept[i].pos;
    if (pos < 1 || pos > static_cast<int>(fragment.size()))
      fail(ErrorKind::LengthMismatch, "kept position outside the fragment");
    v[static_cast<long long>(i)] = fragment[pos - 1] != reference[pos - 1] ? 1.0 : 0.0;
  }
  return v;
}

VariationStructure decode_variation(const RMat& map, int k,
                                    const std::vector<KeptPosition>& kept) {
  if (map.rows() != kCompressedLength || map.cols() != kCompressedLength)
    fail(ErrorKind::BadShape, "feature map must be 1024x1024");
  if (static_cast<int>(kept.size()) != kCompressedLength)
    fail(ErrorKind::BadShape, "need 1024 kept positions");
  if (k < 1 || k > kCompressedLength) fail(ErrorKind::BadShape, "k out of range");

  const RVec prob = map.diagonal().cwiseMax(0.0).cwiseSqrt();
  std::vector<int> order(kCompressedLength);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (prob[a] != prob[b]) return prob[a] > prob[b];
    return a < b;
  });
  order.resize(k);
  std::sort(order.begin(), order.end());

  VariationStructure vs;
  vs.k = k;
  vs.positions_1024 = order;
  for (const int idx : order) {
    vs.positions_3822.push_back(kept[idx].pos);
    vs.positions_genome.push_back(kept[idx].pos + kGenomeOffset);
  }
  return vs;
}

int strain_k(const std::string& preset) {
  if (preset == "delta") return 21;
  if (preset == "omicron") return 31;
  fail(ErrorKind::BadConfig, "unknown strain preset: " + preset);
}

std::string map_to_strain(const VariationStructure& vs, const std::string& strain_fragment,
                          std::uint64_t seed) {
  if (static_cast<int>(strain_fragment.size()) != kSpikeLength)
    fail(ErrorKind::LengthMismatch, "strain fragment must have length 3822");
  static constexpr char kBases[4] = {'A', 'C', 'G', 'T'};
  std::string out = strain_fragment;
  Rng rng(seed);
  for (const int pos : vs.positions_3822) {
    const char cur = out[pos - 1];
    int cur_idx = -1;
    for (int b = 0; b < 4; ++b)
      if (kBases[b] == cur) cur_idx = b;
    if (cur_idx < 0) {
      out[pos - 1] = kBases[rng.below(4)];
    } else {
      int pick = static_cast<int>(rng.below(3));
      if (pick >= cur_idx) ++pick;
      out[pos - 1] = kBases[pick];
    }
  }
  return out;
}

std::vector<long long> mutation_frequency(const std::vector<std::string>& fragments,
                                          const std::string& reference) {
  std::vector<long long> counts(reference.size(), 0);
  for (const std::string& f : fragments) {
    if (f.size() != reference.size())
      fail(ErrorKind::LengthMismatch, "fragment length differs from the reference");
    for (size_t i = 0; i < f.size(); ++i)
      if (f[i] != reference[i]) ++counts[i];
  }
  return counts;
}

void write_frequency_csv(const std::string& path, const std::vector<long long>& counts) {
  if (static_cast<int>(counts.size()) != kSpikeLength)
    fail(ErrorKind::LengthMismatch, "frequency report covers the 3822-long spike fragment");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  os << "position,count,section\n";
  for (int pos = 1; pos <= kSpikeLength; ++pos)
    os << pos << ',' << counts[pos - 1] << ',' << section_of(pos) << '\n';
}

SpikeCohort SpikeCohort::build(const std::vector<AlignedGenome>& genomes,
                               const AlignedGenome& reference, std::uint64_t seed) {
  SpikeCohort cohort;
  cohort.seed = seed;
  cohort.reference = intercept_spike(reference, reference.bases);
  for (const AlignedGenome& g : genomes) {
    cohort.ids.push_back(g.id);
    cohort.fragments.push_back(intercept_spike(g, reference.bases));
  }
  cohort.kept = compress_positions(cohort.fragments, cohort.reference, seed);
  for (const std::string& f : cohort.fragments)
    cohort.vectors.push_back(mutation_vector(f, cohort.reference, cohort.kept));
  return cohort;
}

long long SpikeCohort::total_mutations() const {
  long long total = 0;
  for (size_t i = 0; i < fragments.size(); ++i)
    for (int p = 0; p < kSpikeLength; ++p)
      if (fragments[i][p] != reference[p]) ++total;
  return total;
}

void SpikeCohort::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["format"] = "spike-cohort-v1";
  j["window"] = {{"start", kSpikeStart}, {"end", kSpikeEnd}};
  j["seed"] = seed;
  j["reference"] = reference;
  nlohmann::ordered_json kp = nlohmann::ordered_json::array();
  for (const KeptPosition& p : kept) kp.push_back({{"pos", p.pos}, {"kind", to_string(p.kind)}});
  j["kept_positions"] = std::move(kp);
  nlohmann::ordered_json seqs = nlohmann::ordered_json::array();
  for (size_t i = 0; i < fragments.size(); ++i) {
    std::string bits(vectors[i].size(), '0');
    for (long long b = 0; b < vectors[i].size(); ++b)
      if (vectors[i][b] != 0.0) bits[b] = '1';
    seqs.push_back({{"id", ids[i]}, {"fragment", fragments[i]}, {"vector", bits}});
  }
  j["sequences"] = std::move(seqs);
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  os << j.dump(1, '\t') << '\n';
}

SpikeCohort SpikeCohort::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open cohort " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::Io, std::string("bad cohort JSON: ") + e.what());
  }
  if (j.value("format", "") != "spike-cohort-v1") fail(ErrorKind::Io, "unknown cohort format");
  SpikeCohort cohort;
  cohort.seed = j.at("seed").get<std::uint64_t>();
  cohort.reference = j.at("reference").get<std::string>();
  for (const auto& p : j.at("kept_positions"))
    cohort.kept.push_back(
        {p.at("pos").get<int>(), kept_kind_from_string(p.at("kind").get<std::string>())});
  for (const auto& s : j.at("sequences")) {
    cohort.ids.push_back(s.at("id").get<std::string>());
    cohort.fragments.push_back(s.at("fragment").get<std::string>());
    const std::string bits = s.at("vector").get<std::string>();
    RVec v = RVec::Zero(static_cast<long long>(bits.size()));
    for (size_t b = 0; b < bits.size(); ++b) v[static_cast<long long>(b)] = bits[b] == '1' ? 1 : 0;
    cohort.vectors.push_back(std::move(v));
  }
  return cohort;
}

std::vector<FastaRecord> synthetic_cohort(const SyntheticCohortSpec& spec) {
  if (spec.genome_length < kSpikeEnd)
    fail(ErrorKind::WindowNotCovered, "synthetic genome must cover the spike window");
  static constexpr char kBases[4] = {'A', 'C', 'G', 'T'};
  std::vector<int> hotspots = spec.hotspots;
  if (hotspots.empty())
    hotspots = {52,  310, 352, 401,  449,  487,  503,  614,  950,  1059, 1450, 1841,
                1963, 2042, 2131, 2389, 2472, 2790, 3037, 3201, 3336, 3402, 3449, 3602};
  Rng rng(spec.seed);
  std::string reference(spec.genome_length, 'A');
  for (char& c : reference) c = kBases[rng.below(4)];

  std::vector<FastaRecord> records;
  records.push_back({"reference", reference});
  for (int i = 0; i < spec.count; ++i) {
    std::string seq = reference;
    auto mutate_at = [&](long long genome_pos) {
      char& c = seq[genome_pos];
      int cur = 0;
      for (int b = 0; b < 4; ++b)
        if (kBases[b] == c) cur = b;
      int pick = static_cast<int>(rng.below(3));
      if (pick >= cur) ++pick;
      c = kBases[pick];
    };
    for (const int hp : hotspots)
      if (rng.uniform01() < spec.hotspot_rate) mutate_at(kGenomeOffset + hp - 1);
    for (int pos = 1; pos <= kSpikeLength; ++pos)
      if (rng.uniform01() < spec.background_rate) mutate_at(kGenomeOffset + pos - 1);
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synth_%04d", i + 1);
    records.push_back({idbuf, std::move(seq)});
  }
  return records;
}

}  // namespace qsgan::genomics
