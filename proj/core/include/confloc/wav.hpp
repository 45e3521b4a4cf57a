#pragma once

#include <confloc/room_sim.hpp>

#include <filesystem>

namespace confloc {

enum class WavFormat { Pcm16, Float32 };

/// Writes an interleaved multichannel RIFF/WAVE file. Pcm16 clips to [-1, 1].
void write_wav(const std::filesystem::path& path,
               const MultichannelRecording& recording,
               WavFormat format = WavFormat::Float32);

/// Reads 16-bit PCM or 32-bit float WAV files (plain or extensible header).
MultichannelRecording read_wav(const std::filesystem::path& path);

}  // namespace confloc
