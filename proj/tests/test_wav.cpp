// Copyright 2026 The mixclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mixclust {
namespace {

AudioBuffer stereo_ramp() {
  AudioBuffer a;
  a.sample_rate = 16000;
  a.channels.assign(2, std::vector<double>(100));
  for (std::size_t i = 0; i < 100; ++i) {
    a.channels[0][i] = (static_cast<double>(i) - 50.0) / 64.0;
    a.channels[1][i] = -a.channels[0][i] / 2.0;
  }
  return a;
}

TEST(Wav, Float32RoundTrip) {
  const AudioBuffer a = stereo_ramp();
  const AudioBuffer b = decode_wav(encode_wav(a, SampleFormat::kFloat32));
  ASSERT_EQ(b.num_channels(), 2u);
  EXPECT_EQ(b.sample_rate, 16000);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(b.channels[c][i], static_cast<double>(static_cast<float>(a.channels[c][i])));
}

TEST(Wav, Pcm16RoundTripWithinQuantisation) {
  AudioBuffer a = stereo_ramp();
  a.channels.resize(1);
  const AudioBuffer b = decode_wav(encode_wav(a, SampleFormat::kPcm16));
  ASSERT_EQ(b.num_channels(), 1u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(b.channels[0][i], a.channels[0][i], 1.0 / 32767.0);
}

TEST(Wav, FileRoundTrip) {
  const auto dir = testing::temp_dir("wav");
  write_wav(dir / "a.wav", stereo_ramp());
  const AudioBuffer b = read_wav(dir / "a.wav");
  EXPECT_EQ(b.num_frames(), 100u);
}

TEST(Wav, RejectsGarbage) {
  EXPECT_THROW(decode_wav({1, 2, 3}), InvalidInput);
  std::vector<std::uint8_t> bytes = encode_wav(stereo_ramp(), SampleFormat::kFloat32);
  bytes[0] = 'X';
  EXPECT_THROW(decode_wav(bytes), InvalidInput);
  EXPECT_THROW(read_wav("/nonexistent/file.wav"), InvalidInput);
}

}  // namespace
}  // namespace mixclust
