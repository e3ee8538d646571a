#include "binspp/audio_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "binspp/error.hpp"
#include "binspp/random.hpp"

namespace binspp {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

std::vector<fs::path> list_wavs(const fs::path& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(dir, ec)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
      if (ext == ".wav") files.push_back(fs::absolute(e.path()).lexically_normal());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

Utterance read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = b + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, size - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(ErrorCode::UnsupportedFormat, "short fmt chunk");
      format = read_u16(b + body);
      channels = read_u16(b + body + 2);
      rate = read_u32(b + body + 4);
      bits = read_u16(b + body + 14);
      if (format == 0xFFFE && avail >= 26) format = read_u16(b + body + 24);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = b + body;
      data_len = avail;
      break;
    }
    pos = body + len + (len & 1u);
  }

  if (!have_fmt || data == nullptr)
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " lacks fmt or data chunk");
  if (format != 1 || channels != 1 || bits != 16 || rate != kSampleRate) {
    std::ostringstream msg;
    msg << path.string() << ": need mono 16-bit PCM at 16000 Hz, got format " << format << ", "
        << channels << " ch, " << bits << " bit, " << rate << " Hz";
    throw Error(ErrorCode::UnsupportedFormat, msg.str());
  }

  Utterance u;
  u.id = path.stem().string();
  u.sample_rate = kSampleRate;
  const std::size_t n = data_len / 2;
  u.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(data + 2 * i));
    u.samples[i] = static_cast<double>(raw) / 32768.0;
  }
  return u;
}

void write_wav(const fs::path& path, const Utterance& u) {
  if (u.sample_rate != kSampleRate)
    throw Error(ErrorCode::UnsupportedFormat, "only 16000 Hz output is supported");
  const auto data_bytes = static_cast<std::uint32_t>(u.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : u.samples) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

double mean_power(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return acc / static_cast<double>(samples.size());
}

MixResult mix_at_snr(const Utterance& clean, const Utterance& noise, double snr_db,
                     std::uint64_t seed) {
  const double p_clean = mean_power(clean.samples);
  if (!(p_clean > 0.0)) throw Error(ErrorCode::SilentInput, "clean signal '" + clean.id + "'");
  if (!(mean_power(noise.samples) > 0.0))
    throw Error(ErrorCode::SilentInput, "noise signal '" + noise.id + "'");

  const std::size_t n = clean.samples.size();
  const std::size_t m = noise.samples.size();
  std::vector<double> aligned(n);
  if (m > n) {
    Rng rng(seed);
    const std::size_t offset = uniform_index(rng, m - n + 1);
    std::copy_n(noise.samples.begin() + static_cast<std::ptrdiff_t>(offset), n, aligned.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) aligned[i] = noise.samples[i % m];
  }

  const double p_noise = mean_power(aligned);
  if (!(p_noise > 0.0))
    throw Error(ErrorCode::SilentInput, "aligned noise segment of '" + noise.id + "' is silent");
  double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixResult r;
  r.noisy.id = clean.id + "+" + noise.id;
  r.scaled_noise.id = noise.id;
  r.clean = clean;
  r.noisy.samples.resize(n);
  r.scaled_noise.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = gain * aligned[i];
    r.scaled_noise.samples[i] = d;
    r.noisy.samples[i] = clean.samples[i] + d;
    peak = std::max(peak, std::abs(r.noisy.samples[i]));
  }
  if (peak > 1.0) {
    for (std::size_t i = 0; i < n; ++i) {
      r.noisy.samples[i] /= peak;
      r.scaled_noise.samples[i] /= peak;
      r.clean.samples[i] /= peak;
    }
    gain /= peak;
    r.clean_scale = 1.0 / peak;
  }
  r.gain = gain;
  return r;
}

Manifest build_manifest(const fs::path& clean_dir, const fs::path& noise_dir, double snr_min,
                        double snr_max, std::uint64_t seed) {
  if (!(snr_min <= snr_max))
    throw Error(ErrorCode::InvalidConfig, "snr_min must not exceed snr_max");
  const auto cleans = list_wavs(clean_dir);
  if (cleans.empty()) throw Error(ErrorCode::EmptyDirectory, clean_dir.string());
  const auto noises = list_wavs(noise_dir);
  if (noises.empty()) throw Error(ErrorCode::EmptyDirectory, noise_dir.string());

  Manifest m;
  Rng rng(seed);
  for (std::size_t i = 0; i < cleans.size(); ++i) {
    ManifestEntry e;
    const auto& noise = noises[uniform_index(rng, noises.size())];
    e.clean = cleans[i].string();
    e.noise = noise.string();
    e.mix.clean_id = cleans[i].stem().string();
    e.mix.noise_id = noise.stem().string();
    e.mix.snr_db = uniform(rng, snr_min, snr_max);
    e.mix.seed = derive_seed(seed, i);
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json arr = json::array();
  for (const auto& e : m.entries) {
    json o = {{"clean", e.clean}, {"noise", e.noise}, {"snr_db", e.mix.snr_db},
              {"seed", e.mix.seed}};
    if (!e.noisy.empty()) o["noisy"] = e.noisy;
    if (!e.scaled_noise.empty()) o["scaled_noise"] = e.scaled_noise;
    if (!e.noisy.empty()) {
      o["gain"] = e.mix.gain;
      o["clean_scale"] = e.mix.clean_scale;
    }
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptFile, std::string("manifest: ") + ex.what());
  }
  if (!arr.is_array()) throw Error(ErrorCode::CorruptFile, "manifest must be a JSON array");
  Manifest m;
  try {
    for (const auto& o : arr) {
      ManifestEntry e;
      e.clean = o.at("clean").get<std::string>();
      e.noise = o.at("noise").get<std::string>();
      e.mix.snr_db = o.at("snr_db").get<double>();
      e.mix.seed = o.at("seed").get<std::uint64_t>();
      e.mix.clean_id = fs::path(e.clean).stem().string();
      e.mix.noise_id = fs::path(e.noise).stem().string();
      if (o.contains("noisy")) e.noisy = o["noisy"].get<std::string>();
      if (o.contains("scaled_noise")) e.scaled_noise = o["scaled_noise"].get<std::string>();
      if (o.contains("gain")) e.mix.gain = o["gain"].get<double>();
      if (o.contains("clean_scale")) e.mix.clean_scale = o["clean_scale"].get<double>();
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::CorruptFile, std::string("manifest entry: ") + ex.what());
  }
  return m;
}

void save_manifest(const fs::path& path, const Manifest& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << manifest_to_json(m);
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::NotFound, path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return manifest_from_json(ss.str());
}

MixResult realize_entry(const ManifestEntry& e) {
  if (!e.noisy.empty() && !e.scaled_noise.empty()) {
    MixResult r;
    r.noisy = read_wav(e.noisy);
    r.scaled_noise = read_wav(e.scaled_noise);
    r.clean = read_wav(e.clean);
    for (double& v : r.clean.samples) v *= e.mix.clean_scale;
    if (r.noisy.samples.size() != r.scaled_noise.samples.size() ||
        r.noisy.samples.size() != r.clean.samples.size())
      throw Error(ErrorCode::ShapeMismatch, "clean, noisy and scaled-noise WAVs differ in length");
    r.gain = e.mix.gain;
    r.clean_scale = e.mix.clean_scale;
    return r;
  }
  return mix_at_snr(read_wav(e.clean), read_wav(e.noise), e.mix.snr_db, e.mix.seed);
}

}  // namespace binspp
