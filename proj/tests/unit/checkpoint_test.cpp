#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "adlabel/checkpoint.hpp"
#include "adlabel/error.hpp"
#include "fixtures.hpp"

namespace adlabel {
namespace {

template <typename T>
std::vector<NamedTensor<T>> sample_entries() {
  Rng rng(17);
  std::vector<NamedTensor<T>> out;
  out.push_back({"a.kernel", Tensor<T>(Shape{2, 3, 3, 3})});
  out.push_back({"a.bias", Tensor<T>(Shape{2})});
  out.push_back({"scalar", Tensor<T>(Shape{1})});
  for (auto& e : out)
    for (auto& v : e.value.data()) v = static_cast<T>(uniform(rng, -10, 10));
  // Values whose bit patterns a text round-trip would lose.
  out[2].value[0] = std::numeric_limits<T>::denorm_min();
  out[1].value[0] = -0.0;
  return out;
}

template <typename T>
void expect_bitwise_round_trip() {
  testing::TempDir dir("ckpt");
  const auto entries = sample_entries<T>();
  save_checkpoint<T>(dir.path() / "x.ckpt", entries);
  const auto back = load_checkpoint<T>(dir.path() / "x.ckpt");
  ASSERT_EQ(back.size(), entries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].name, entries[i].name);
    EXPECT_EQ(back[i].value.shape(), entries[i].value.shape());
    EXPECT_EQ(std::memcmp(back[i].value.data().data(), entries[i].value.data().data(),
                          entries[i].value.size() * sizeof(T)),
              0);
  }
  // Saving the loaded copy reproduces the file exactly.
  save_checkpoint<T>(dir.path() / "y.ckpt", back);
  EXPECT_EQ(file_digest(dir.path() / "x.ckpt"), file_digest(dir.path() / "y.ckpt"));
}

TEST(Checkpoint, FloatRoundTripIsBitExact) { expect_bitwise_round_trip<float>(); }
TEST(Checkpoint, DoubleRoundTripIsBitExact) { expect_bitwise_round_trip<double>(); }

TEST(Checkpoint, HeaderDescribesPayload) {
  testing::TempDir dir("ckpt");
  save_checkpoint<float>(dir.path() / "x.ckpt", sample_entries<float>());
  const std::string bytes = testing::read_file(dir.path() / "x.ckpt");
  const auto nl = bytes.find('\n');
  ASSERT_NE(nl, std::string::npos);
  const std::string header = bytes.substr(0, nl);
  EXPECT_NE(header.find("\"dtype\":\"f32\""), std::string::npos);
  EXPECT_NE(header.find("\"name\":\"a.kernel\""), std::string::npos);
  EXPECT_EQ(bytes.size() - nl - 1, (54 + 2 + 1) * sizeof(float));
}

TEST(Checkpoint, DtypeMismatchIsDataError) {
  testing::TempDir dir("ckpt");
  save_checkpoint<float>(dir.path() / "x.ckpt", sample_entries<float>());
  EXPECT_THROW(load_checkpoint<double>(dir.path() / "x.ckpt"), DataError);
}

TEST(Checkpoint, TruncatedOrMissingFileIsDataError) {
  testing::TempDir dir("ckpt");
  const auto path = dir.path() / "x.ckpt";
  save_checkpoint<float>(path, sample_entries<float>());
  const std::string bytes = testing::read_file(path);
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 5);
  EXPECT_THROW(load_checkpoint<float>(path), DataError);
  std::ofstream(path, std::ios::binary | std::ios::trunc) << "not a checkpoint\n";
  EXPECT_THROW(load_checkpoint<float>(path), DataError);
  EXPECT_THROW(load_checkpoint<float>(dir.path() / "absent.ckpt"), DataError);
}

TEST(Checkpoint, DigestTracksContent) {
  testing::TempDir dir("ckpt");
  auto entries = sample_entries<float>();
  save_checkpoint<float>(dir.path() / "a.ckpt", entries);
  entries[0].value[3] = std::nextafter(entries[0].value[3], 1e9f);
  save_checkpoint<float>(dir.path() / "b.ckpt", entries);
  EXPECT_NE(file_digest(dir.path() / "a.ckpt"), file_digest(dir.path() / "b.ckpt"));
}

}  // namespace
}  // namespace adlabel
