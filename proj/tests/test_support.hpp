#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pccseg/network.hpp"
#include "pccseg/types.hpp"

namespace pcc::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct TwoBlockFixture {
  ImageBuffer image;
  LabelMap scribbles;
  LabelMap truth;  // left half class 0, right half class 1
};

/// Left half red, right half blue, `per_class` scribble pixels per block.
TwoBlockFixture two_block_fixture(int size = 64, int per_class = 5);

/// Hop distances from `source`; unreachable nodes get UINT32_MAX.
std::vector<std::uint32_t> bfs_distances(const Network& net, std::uint32_t source);

/// Writes labels as an RGBA scribble PNG using the standard palette.
void write_scribbles_png(const LabelMap& labels, const std::filesystem::path& path);

/// Writes a binary map as a grayscale trimap (class 0 -> 0, 1 -> 255, IGNORE -> 128).
void write_trimap_png(const LabelMap& labels, const std::filesystem::path& path);

ImageBuffer random_image(int width, int height, std::mt19937_64& rng);

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs a shell command, capturing standard output and standard error.
CommandResult run_command(const std::string& command);

/// Single-quoted for /bin/sh.
std::string shell_quote(const std::string& s);

struct BlobFixture {
  ImageBuffer image;
  LabelMap scribbles;  // one scribble pixel per blob
  LabelMap truth;      // left half class 0, right half class 1
};

/// Two Gaussian color clusters (left half around `a`, right half around `b`)
/// with per-channel noise of the given standard deviation.
BlobFixture gaussian_blobs(int width, int height, Rgb a, Rgb b, double noise,
                           std::mt19937_64& rng);

/// Pearson chi-square goodness of fit; returns the upper-tail p-value.
double chi_square_p_value(std::span<const std::uint64_t> observed,
                          std::span<const double> probabilities);

}  // namespace pcc::testing
