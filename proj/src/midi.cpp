// Copyright 2026 The pianogm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pianogm/midi.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <utility>

namespace pianogm {

MidiParseError::MidiParseError(const std::string& what, std::size_t offset)
    : std::runtime_error("MIDI parse error at byte " + std::to_string(offset) +
                         ": " + what),
      offset_(offset) {}

namespace {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= end_; }

  std::uint8_t u8() {
    if (pos_ >= end_) throw MidiParseError("unexpected end of data", pos_);
    return bytes_[pos_++];
  }
  std::uint8_t peek() const {
    if (pos_ >= end_) throw MidiParseError("unexpected end of data", pos_);
    return bytes_[pos_];
  }
  std::uint32_t u16() {
    const std::uint32_t hi = u8();
    return (hi << 8) | u8();
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  std::uint32_t vlq() {
    const std::size_t start = pos_;
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      value = (value << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return value;
    }
    throw MidiParseError("variable-length quantity longer than 4 bytes", start);
  }
  void skip(std::size_t n) {
    if (n > end_ - pos_) throw MidiParseError("length runs past end of chunk", pos_);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

struct TempoChange {
  std::uint64_t tick;
  std::uint32_t micros_per_quarter;
};

struct RawNote {
  int pitch;
  int velocity;
  std::uint64_t on_tick;
  std::uint64_t off_tick;
};

struct TrackData {
  std::vector<RawNote> notes;
  std::vector<TempoChange> tempos;
  int unmatched = 0;
  int orphan_offs = 0;
};

TrackData parse_track(std::span<const std::uint8_t> bytes, std::size_t begin,
                      std::size_t end) {
  TrackData track;
  ByteReader in(bytes, begin, end);
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  // FIFO of (on_tick, velocity) per channel*128+pitch.
  std::map<int, std::deque<std::pair<std::uint64_t, int>>> pending;

  while (!in.done()) {
    tick += in.vlq();
    std::uint8_t status = in.peek();
    if (status & 0x80) {
      in.u8();
    } else {
      if (running == 0) throw MidiParseError("data byte without running status", in.pos());
      status = running;
    }

    if (status == 0xFF) {
      const std::uint8_t type = in.u8();
      const std::uint32_t len = in.vlq();
      const std::size_t at = in.pos();
      if (type == 0x51) {
        if (len != 3) throw MidiParseError("tempo meta event must have length 3", at);
        std::uint32_t mpq = in.u8();
        mpq = (mpq << 8) | in.u8();
        mpq = (mpq << 8) | in.u8();
        if (mpq == 0) throw MidiParseError("zero tempo", at);
        track.tempos.push_back({tick, mpq});
      } else {
        in.skip(len);
        if (type == 0x2F) break;
      }
      running = 0;
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      in.skip(in.vlq());
      running = 0;
      continue;
    }
    if (status >= 0xF0) throw MidiParseError("unsupported system message in track", in.pos() - 1);

    running = status;
    const int kind = status & 0xF0;
    const int channel = status & 0x0F;
    const std::uint8_t d1 = in.u8();
    if (kind == 0xC0 || kind == 0xD0) continue;
    const std::uint8_t d2 = in.u8();
    if ((d1 | d2) & 0x80) throw MidiParseError("data byte has high bit set", in.pos() - 2);

    const int key = channel * 128 + d1;
    if (kind == 0x90 && d2 > 0) {
      pending[key].emplace_back(tick, d2);
    } else if (kind == 0x80 || kind == 0x90) {
      auto it = pending.find(key);
      if (it == pending.end() || it->second.empty()) {
        ++track.orphan_offs;
        continue;
      }
      const auto [on_tick, velocity] = it->second.front();
      it->second.pop_front();
      track.notes.push_back({d1, velocity, on_tick, tick});
    }
    // Controllers (including sustain pedal), pitch bend and aftertouch are ignored.
  }

  for (auto& [key, queue] : pending) {
    for (const auto& [on_tick, velocity] : queue) {
      track.notes.push_back({key % 128, velocity, on_tick, tick});
      ++track.unmatched;
    }
  }
  return track;
}

class TickClock {
 public:
  TickClock(std::uint16_t division, std::vector<TempoChange> tempos) {
    if (division & 0x8000) {
      const int fps = -static_cast<std::int8_t>(division >> 8);
      const int ticks_per_frame = division & 0xFF;
      smpte_seconds_per_tick_ = 1.0 / (static_cast<double>(fps) * ticks_per_frame);
      return;
    }
    ppq_ = division;
    std::stable_sort(tempos.begin(), tempos.end(),
                     [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
    segments_.push_back({0, 0.0, 500000});
    for (const auto& change : tempos) {
      const auto& last = segments_.back();
      const double start =
          last.seconds + seconds_span(change.tick - last.tick, last.micros_per_quarter);
      if (change.tick == last.tick) {
        segments_.back().micros_per_quarter = change.micros_per_quarter;
      } else {
        segments_.push_back({change.tick, start, change.micros_per_quarter});
      }
    }
  }

  double seconds(std::uint64_t tick) const {
    if (smpte_seconds_per_tick_ > 0.0) return tick * smpte_seconds_per_tick_;
    auto it = std::upper_bound(segments_.begin(), segments_.end(), tick,
                               [](std::uint64_t t, const Segment& s) { return t < s.tick; });
    const Segment& seg = *std::prev(it);
    return seg.seconds + seconds_span(tick - seg.tick, seg.micros_per_quarter);
  }

 private:
  struct Segment {
    std::uint64_t tick;
    double seconds;
    std::uint32_t micros_per_quarter;
  };

  double seconds_span(std::uint64_t ticks, std::uint32_t mpq) const {
    return static_cast<double>(ticks) * mpq / (1e6 * ppq_);
  }

  std::uint16_t ppq_ = 480;
  double smpte_seconds_per_tick_ = 0.0;
  std::vector<Segment> segments_;
};

}  // namespace

MidiParseResult parse_midi(std::span<const std::uint8_t> bytes) {
  ByteReader header(bytes, 0, bytes.size());
  static constexpr std::array<std::uint8_t, 4> kMThd{'M', 'T', 'h', 'd'};
  static constexpr std::array<std::uint8_t, 4> kMTrk{'M', 'T', 'r', 'k'};
  for (auto expected : kMThd) {
    if (header.u8() != expected) throw MidiParseError("missing MThd header", 0);
  }
  const std::uint32_t header_len = header.u32();
  if (header_len < 6) throw MidiParseError("MThd chunk shorter than 6 bytes", 4);
  const std::size_t format_at = header.pos();
  const std::uint32_t format = header.u16();
  const std::uint32_t ntracks = header.u16();
  const auto division = static_cast<std::uint16_t>(header.u16());
  if (format > 1) throw MidiParseError("only SMF type 0 and 1 are supported", format_at);
  if (division == 0) throw MidiParseError("zero time division", format_at + 4);
  header.skip(header_len - 6);

  std::vector<TrackData> tracks;
  std::size_t pos = header.pos();
  while (pos < bytes.size() && tracks.size() < ntracks) {
    ByteReader chunk(bytes, pos, bytes.size());
    std::array<std::uint8_t, 4> id{};
    for (auto& b : id) b = chunk.u8();
    const std::uint32_t len = chunk.u32();
    const std::size_t body = chunk.pos();
    if (len > bytes.size() - body) throw MidiParseError("chunk length runs past end of file", pos + 4);
    if (id == kMTrk) tracks.push_back(parse_track(bytes, body, body + len));
    pos = body + len;
  }
  if (tracks.size() < ntracks) {
    throw MidiParseError("header declares " + std::to_string(ntracks) +
                             " tracks but only " + std::to_string(tracks.size()) +
                             " were found",
                         pos);
  }

  std::vector<TempoChange> tempos;
  for (const auto& t : tracks) tempos.insert(tempos.end(), t.tempos.begin(), t.tempos.end());
  const TickClock clock(division, std::move(tempos));

  MidiParseResult result;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& t = tracks[i];
    if (t.unmatched > 0) {
      result.closed_at_track_end = true;
      result.warnings.push_back("track " + std::to_string(i) + ": " +
                                std::to_string(t.unmatched) +
                                " note-on(s) without note-off closed at track end");
    }
    if (t.orphan_offs > 0) {
      result.warnings.push_back("track " + std::to_string(i) + ": " +
                                std::to_string(t.orphan_offs) +
                                " note-off(s) without a sounding note ignored");
    }
    int zero_length = 0;
    for (const auto& n : t.notes) {
      const double onset = clock.seconds(n.on_tick);
      const double offset = clock.seconds(n.off_tick);
      if (!(offset > onset)) {
        ++zero_length;
        continue;
      }
      result.notes.push_back({n.pitch, onset, offset, n.velocity});
    }
    if (zero_length > 0) {
      result.warnings.push_back("track " + std::to_string(i) + ": dropped " +
                                std::to_string(zero_length) + " zero-length note(s)");
    }
  }
  std::stable_sort(result.notes.begin(), result.notes.end(),
                   [](const NoteEvent& a, const NoteEvent& b) {
                     if (a.onset != b.onset) return a.onset < b.onset;
                     return a.pitch < b.pitch;
                   });
  return result;
}

MidiParseResult read_midi_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open MIDI file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_midi(bytes);
}

}  // namespace pianogm
