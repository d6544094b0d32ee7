#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dmt {

using Rng = std::mt19937_64;

/// Stream identifiers reserved for non-agent consumers of a master seed.
enum class StreamPurpose : std::uint32_t { Agent = 0, Partition = 1, Probe = 2, Dataset = 3 };

/// Derives an independent generator from (master seed, purpose, index).
inline Rng make_stream(std::uint64_t master_seed, StreamPurpose purpose, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
  return Rng(seq);
}

/// One generator per agent, split from the master seed.
inline std::vector<Rng> make_agent_streams(std::uint64_t master_seed, std::size_t n) {
  std::vector<Rng> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.push_back(make_stream(master_seed, StreamPurpose::Agent, i));
  return streams;
}

}  // namespace dmt
