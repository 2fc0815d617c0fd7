#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qsgan/densmat.hpp"
#include "qsgan/rng.hpp"

namespace qsgan::genomics {

// spike window in NC_045512.2 reference coordinates (1-based, inclusive)
inline constexpr int kSpikeStart = 21563;
inline constexpr int kSpikeEnd = 25384;
inline constexpr int kSpikeLength = kSpikeEnd - kSpikeStart + 1;  // 3822
inline constexpr int kCompressedLength = 1024;
inline constexpr long long kGenomeOffset = kSpikeStart - 1;

inline constexpr std::array<std::pair<int, int>, 4> kFrequencySections = {
    {{1, 956}, {957, 1911}, {1912, 2867}, {2868, 3822}}};
int section_of(int pos);

struct FastaRecord {
  std::string id;
  std::string seq;
};

std::vector<FastaRecord> read_fasta(const std::string& path);
void write_fasta(const std::string& path, const std::vector<FastaRecord>& records);

struct AlignedGenome {
  std::string id;
  std::string bases;  // over {A,C,G,T,N,-}, aligned to the reference row
};

// symbols of `aligned` at reference coordinates [start, end]; alignment
// columns where the reference row carries a gap are insertions and skipped
std::string extract_window(const std::string& aligned, const std::string& reference_aligned,
                           int start, int end);
std::string intercept_spike(const AlignedGenome& g, const std::string& reference_aligned);

enum class KeptKind { Mutated, Neighbor, Random };
const char* to_string(KeptKind k);
KeptKind kept_kind_from_string(const std::string& s);

struct KeptPosition {
  int pos = 0;  // 1-based spike coordinate
  KeptKind kind = KeptKind::Random;
};

// selection order: every locus mutated anywhere in the cohort, their +-1
// neighbors, then a seeded random fill up to 1024; output sorted
std::vector<KeptPosition> compress_positions(const std::vector<std::string>& fragments,
                                             const std::string& reference, std::uint64_t seed);

// entry i is 1 iff the fragment differs from the reference at kept[i]
RVec mutation_vector(const std::string& fragment, const std::string& reference,
                     const std::vector<KeptPosition>& kept);

struct VariationStructure {
  std::vector<int> positions_1024;          // 0-based compressed indices, ascending
  std::vector<int> positions_3822;          // 1-based spike coordinates
  std::vector<long long> positions_genome;  // 1-based genome coordinates
  int k = 0;
  std::uint64_t seed = 0;
};

// top-k entries of sqrt(clamped diagonal), ties to the lower index
VariationStructure decode_variation(const RMat& map, int k,
                                    const std::vector<KeptPosition>& kept);
int strain_k(const std::string& preset);  // delta -> 21, omicron -> 31

// substitute a seeded uniform alternative base at every decoded position
std::string map_to_strain(const VariationStructure& vs, const std::string& strain_fragment,
                          std::uint64_t seed);

// per-position count of fragments differing from the reference
std::vector<long long> mutation_frequency(const std::vector<std::string>& fragments,
                                          const std::string& reference);
// CSV "position,count,section" over the four spike sections
void write_frequency_csv(const std::string& path, const std::vector<long long>& counts);

struct SpikeCohort {
  std::string reference;  // spike fragment of the reference, length 3822
  std::vector<std::string> ids;
  std::vector<std::string> fragments;
  std::vector<KeptPosition> kept;
  std::vector<RVec> vectors;
  std::uint64_t seed = 0;

  static SpikeCohort build(const std::vector<AlignedGenome>& genomes,
                           const AlignedGenome& reference, std::uint64_t seed);
  void save(const std::string& path) const;
  static SpikeCohort load(const std::string& path);
  long long total_mutations() const;
};

// Seeded stand-in for restricted sequence databases: an ungapped reference
// genome plus mutated copies with planted spike hotspots.
struct SyntheticCohortSpec {
  int count = 200;
  int genome_length = 29903;
  std::vector<int> hotspots;  // 1-based spike coordinates; defaults used when empty
  double hotspot_rate = 0.6;
  double background_rate = 5e-5;
  std::uint64_t seed = 1;
};
std::vector<FastaRecord> synthetic_cohort(const SyntheticCohortSpec& spec);

}  // namespace qsgan::genomics
