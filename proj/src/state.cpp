#include "forge/state.hpp"

#include <zstd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "lz4/lz4.h"

namespace forge::state {

std::string_view to_string(Codec c) {
  switch (c) {
    case Codec::None: return "none";
    case Codec::Zstd: return "zstd";
    case Codec::Lz4: return "lz4";
  }
  return "?";
}

Codec codec_from_string(std::string_view s) {
  if (s == "none") return Codec::None;
  if (s == "zstd") return Codec::Zstd;
  if (s == "lz4") return Codec::Lz4;
  throw ParamError("unknown compression '" + std::string(s) + "' (expected none, zstd or lz4)");
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.append(buf, 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.append(buf, 4);
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, std::string_view s) {
  put_u64(out, s.size());
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw CorruptCache("truncated cache payload");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view str() { return take(u64()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string compress_blob(std::string_view bytes, Codec codec, int level) {
  std::string out;
  out.push_back(static_cast<char>(codec));
  put_u64(out, bytes.size());
  switch (codec) {
    case Codec::None:
      out.append(bytes);
      break;
    case Codec::Zstd: {
      std::size_t bound = ZSTD_compressBound(bytes.size());
      std::size_t head = out.size();
      out.resize(head + bound);
      std::size_t n = ZSTD_compress(out.data() + head, bound, bytes.data(), bytes.size(), level);
      if (ZSTD_isError(n)) throw Error("CompressionError", std::string("zstd: ") + ZSTD_getErrorName(n));
      out.resize(head + n);
      break;
    }
    case Codec::Lz4: {
      if (bytes.size() > static_cast<std::size_t>(LZ4_MAX_INPUT_SIZE)) {
        throw ParamError("lz4 input larger than " + std::to_string(LZ4_MAX_INPUT_SIZE) + " bytes");
      }
      int bound = LZ4_compressBound(static_cast<int>(bytes.size()));
      std::size_t head = out.size();
      out.resize(head + static_cast<std::size_t>(bound));
      int n = LZ4_compress_default(bytes.data(), out.data() + head, static_cast<int>(bytes.size()), bound);
      if (n <= 0 && !bytes.empty()) throw Error("CompressionError", "lz4 compression failed");
      out.resize(head + static_cast<std::size_t>(n));
      break;
    }
  }
  return out;
}

std::string decompress_blob(std::string_view blob) {
  if (blob.size() < 9) throw CorruptCache("compressed blob shorter than its header");
  auto tag = static_cast<std::uint8_t>(blob[0]);
  Reader r(blob.substr(1, 8));
  std::uint64_t size = r.u64();
  std::string_view payload = blob.substr(9);
  std::string out;
  switch (tag) {
    case static_cast<std::uint8_t>(Codec::None):
      if (payload.size() != size) throw CorruptCache("stored blob size mismatch");
      return std::string(payload);
    case static_cast<std::uint8_t>(Codec::Zstd): {
      unsigned long long frame = ZSTD_getFrameContentSize(payload.data(), payload.size());
      if (frame == ZSTD_CONTENTSIZE_ERROR || (frame != ZSTD_CONTENTSIZE_UNKNOWN && frame != size)) {
        throw CorruptCache("zstd frame header does not match recorded size");
      }
      out.resize(size);
      std::size_t n = ZSTD_decompress(out.data(), size, payload.data(), payload.size());
      if (ZSTD_isError(n) || n != size) throw CorruptCache("zstd payload does not decode");
      return out;
    }
    case static_cast<std::uint8_t>(Codec::Lz4): {
      if (size > static_cast<std::uint64_t>(LZ4_MAX_INPUT_SIZE)) throw CorruptCache("lz4 size out of range");
      out.resize(size);
      int n = LZ4_decompress_safe(payload.data(), out.data(), static_cast<int>(payload.size()), static_cast<int>(size));
      if (n < 0 || static_cast<std::uint64_t>(n) != size) throw CorruptCache("lz4 payload does not decode");
      return out;
    }
    default:
      throw UnknownCodecTag("codec tag " + std::to_string(tag) + " is not one of 0 (none), 1 (zstd), 2 (lz4)");
  }
}

// ---------------------------------------------------------------------------
// Container

namespace {

constexpr std::string_view kMagic = "FDJC";
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 16 + 8;

std::string encode_columns(const Dataset& ds) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(ds.schema().size()));
  for (const auto& path : ds.schema()) put_str(out, path);
  put_u64(out, ds.size());
  const auto& samples = ds.samples();
  for (std::size_t begin = 0; begin < samples.size(); begin += kBatchRows) {
    std::size_t end = std::min(samples.size(), begin + kBatchRows);
    put_u32(out, static_cast<std::uint32_t>(end - begin));
    for (std::size_t i = begin; i < end; ++i) put_u64(out, samples[i].id);
    for (std::size_t i = begin; i < end; ++i) put_u64(out, samples[i].text.size());
    for (std::size_t i = begin; i < end; ++i) out += samples[i].text;
    for (std::size_t i = begin; i < end; ++i) put_str(out, samples[i].meta.dump());
    // One column per stat key present anywhere in the batch.
    std::map<std::string_view, int> keys;
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& [k, v] : samples[i].stats) keys.emplace(k, 0);
    }
    put_u32(out, static_cast<std::uint32_t>(keys.size()));
    for (const auto& [key, _] : keys) {
      put_str(out, key);
      for (std::size_t i = begin; i < end; ++i) {
        out.push_back(samples[i].stats.contains(key) ? 1 : 0);
      }
      for (std::size_t i = begin; i < end; ++i) {
        auto it = samples[i].stats.find(key);
        if (it != samples[i].stats.end()) put_f64(out, it->second);
      }
    }
  }
  return out;
}

Dataset decode_columns(std::string_view payload) {
  Reader r(payload);
  Schema schema;
  std::uint32_t nschema = r.u32();
  for (std::uint32_t i = 0; i < nschema; ++i) schema.insert(std::string(r.str()));
  std::uint64_t n = r.u64();
  if (n > payload.size()) throw CorruptCache("sample count exceeds payload size");
  std::vector<Sample> samples;
  samples.reserve(n);
  while (samples.size() < n) {
    std::size_t rows = r.u32();
    if (rows == 0 || rows > kBatchRows || samples.size() + rows > n) throw CorruptCache("bad batch row count");
    std::size_t base = samples.size();
    samples.resize(base + rows);
    for (std::size_t i = 0; i < rows; ++i) samples[base + i].id = r.u64();
    std::vector<std::uint64_t> lengths(rows);
    for (auto& len : lengths) len = r.u64();
    for (std::size_t i = 0; i < rows; ++i) samples[base + i].text = std::string(r.take(lengths[i]));
    for (std::size_t i = 0; i < rows; ++i) {
      try {
        samples[base + i].meta = Json::parse(r.str());
      } catch (const Json::exception& e) {
        throw CorruptCache(std::string("meta column: ") + e.what());
      }
    }
    std::uint32_t nkeys = r.u32();
    for (std::uint32_t k = 0; k < nkeys; ++k) {
      std::string key(r.str());
      auto present = r.take(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        if (present[i]) samples[base + i].stats.emplace(key, r.f64());
      }
    }
  }
  if (!r.done()) throw CorruptCache("trailing bytes after last batch");
  return Dataset(std::move(samples), std::move(schema));
}

}  // namespace

std::string encode_container(const Dataset& dataset, const Fingerprint& fingerprint, Codec codec) {
  std::string payload = compress_blob(encode_columns(dataset), codec);
  std::string out;
  out.reserve(kHeaderSize + payload.size());
  out += kMagic;
  out.push_back(static_cast<char>(kVersion));
  out.push_back(static_cast<char>(codec));
  auto fp = fingerprint.bytes();
  out.append(reinterpret_cast<const char*>(fp.data()), fp.size());
  put_u64(out, hash64(payload));
  out += payload;
  return out;
}

Fingerprint container_fingerprint(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || bytes.substr(0, 4) != kMagic) throw CorruptCache("not a forge cache container");
  std::array<std::uint8_t, 16> fp{};
  std::memcpy(fp.data(), bytes.data() + 6, 16);
  return Fingerprint::from_bytes(fp);
}

Container decode_container(std::string_view bytes) {
  Container c;
  c.fingerprint = container_fingerprint(bytes);
  if (static_cast<std::uint8_t>(bytes[4]) != kVersion) {
    throw CorruptCache("container version " + std::to_string(static_cast<int>(bytes[4])) + " is not supported");
  }
  Reader r(bytes.substr(22, 8));
  std::uint64_t digest = r.u64();
  std::string_view payload = bytes.substr(kHeaderSize);
  if (hash64(payload) != digest) throw CorruptCache("payload digest mismatch");
  if (payload.empty() || static_cast<std::uint8_t>(payload[0]) != static_cast<std::uint8_t>(bytes[5])) {
    throw CorruptCache("codec tag in header and payload disagree");
  }
  c.codec = static_cast<Codec>(bytes[5]);
  c.dataset = decode_columns(decompress_blob(payload));
  return c;
}

// ---------------------------------------------------------------------------
// Fingerprints

namespace {

nlohmann::json canonical(const Json& v) {
  if (v.is_object()) {
    nlohmann::json out = nlohmann::json::object();  // std::map: sorted keys
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = canonical(it.value());
    return out;
  }
  if (v.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : v) out.push_back(canonical(e));
    return out;
  }
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::isfinite(d) && d == std::trunc(d) && std::fabs(d) < 9.007199254740992e15) {
      return static_cast<std::int64_t>(d);
    }
    return d;
  }
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u <= static_cast<std::uint64_t>(INT64_MAX)) return static_cast<std::int64_t>(u);
    return u;
  }
  return nlohmann::json::parse(v.dump());
}

}  // namespace

std::string canonical_params(const Json& params) { return canonical(params).dump(); }

Fingerprint op_fingerprint(const Fingerprint& input, std::string_view name, const Json& params,
                           std::uint32_t version, const std::vector<ResourceDigest>& resources) {
  Hasher h;
  h.update_bytes("forge.op.v1").update(input).update_bytes(name).update_bytes(canonical_params(params));
  h.update_u64(version);
  std::vector<const ResourceDigest*> sorted;
  for (const auto& r : resources) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->name < b->name; });
  h.update_u64(sorted.size());
  for (const auto* r : sorted) h.update_bytes(r->name).update(r->digest);
  return h.digest();
}

Fingerprint op_fingerprint(const Fingerprint& input, const Op& op) {
  return op_fingerprint(input, op.name(), op.params(), op.descriptor().version, op.resources());
}

// ---------------------------------------------------------------------------
// Space planning

SpacePlan plan_space(std::size_t mappers, std::size_t filters, std::size_t dedups, std::uint64_t input_bytes) {
  SpacePlan p;
  p.mappers = mappers;
  p.filters = filters;
  p.dedups = dedups;
  p.input_bytes = input_bytes;
  std::uint64_t copies = 1 + mappers + filters + (filters > 0 ? 1 : 0) + dedups;
  p.cache_bytes = copies * input_bytes;
  p.checkpoint_peak_bytes = 3 * input_bytes;
  return p;
}

void apply_measured_ratios(SpacePlan& plan, const std::vector<double>& stage_ratios) {
  if (stage_ratios.empty()) return;
  double total = static_cast<double>(plan.input_bytes);
  for (double r : stage_ratios) total += std::max(0.0, r) * static_cast<double>(plan.input_bytes);
  plan.measured_cache_bytes = static_cast<std::uint64_t>(std::llround(total));
}

std::uint64_t parse_size(std::string_view s) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  s = trim(s);
  std::size_t i = 0;
  while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
  if (i == 0) throw ParamError("size '" + std::string(s) + "' does not start with a number");
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + i, value);
  if (ec != std::errc() || ptr != s.data() + i) throw ParamError("size '" + std::string(s) + "' is not a number");
  std::string unit(trim(s.substr(i)));
  std::transform(unit.begin(), unit.end(), unit.begin(), [](unsigned char c) { return std::toupper(c); });
  static const std::map<std::string, double> units = {
      {"", 1},           {"B", 1},
      {"KB", 1e3},       {"MB", 1e6},          {"GB", 1e9},          {"TB", 1e12},
      {"K", 1e3},        {"M", 1e6},           {"G", 1e9},           {"T", 1e12},
      {"KIB", 1024.0},   {"MIB", 1048576.0},   {"GIB", 1073741824.0}, {"TIB", 1099511627776.0}};
  auto it = units.find(unit);
  if (it == units.end()) throw ParamError("unknown size unit '" + unit + "'");
  return static_cast<std::uint64_t>(std::llround(value * it->second));
}

std::string format_size(std::uint64_t bytes) {
  static const char* names[] = {"B", "KB", "MB", "GB", "TB"};
  double v = static_cast<double>(bytes);
  int u = 0;
  while (v >= 1000.0 && u < 4) {
    v /= 1000.0;
    ++u;
  }
  char buf[32];
  if (u == 0) {
    std::snprintf(buf, sizeof buf, "%llu B", static_cast<unsigned long long>(bytes));
  } else {
    std::snprintf(buf, sizeof buf, "%.2f %s", v, names[u]);
  }
  return buf;
}

std::string describe(const SpacePlan& p) {
  std::string s = "space plan: M=" + std::to_string(p.mappers) + " F=" + std::to_string(p.filters) +
                  " D=" + std::to_string(p.dedups) + " S=" + format_size(p.input_bytes) +
                  "; cache mode needs " + format_size(p.cache_bytes) + " (1 + M + F + [F>0] + D copies of S)" +
                  "; checkpoint mode peaks at " + format_size(p.checkpoint_peak_bytes) + " (3 x S)";
  if (p.measured_cache_bytes) s += "; prior-run estimate " + format_size(*p.measured_cache_bytes);
  return s;
}

Json to_json(const SpacePlan& p) {
  Json j = {{"M", p.mappers},
            {"F", p.filters},
            {"D", p.dedups},
            {"S", p.input_bytes},
            {"cache_bytes", p.cache_bytes},
            {"checkpoint_peak_bytes", p.checkpoint_peak_bytes}};
  j["measured_cache_bytes"] = p.measured_cache_bytes ? Json(*p.measured_cache_bytes) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Policy

std::uint64_t free_space(const fs::path& dir) {
  std::error_code ec;
  fs::path p = dir.empty() ? fs::current_path() : fs::absolute(dir);
  while (!fs::exists(p, ec) && p.has_parent_path() && p != p.parent_path()) p = p.parent_path();
  auto info = fs::space(p, ec);
  if (ec) return 0;
  return info.available;
}

ResolvedPolicy resolve_policy(const StatePolicy& policy, const SpacePlan& plan, std::optional<std::uint64_t> free_bytes) {
  ResolvedPolicy out;
  out.cache = policy.cache;
  out.checkpoint = policy.checkpoint == CheckpointMode::On;
  std::uint64_t free = 0;
  if (policy.disk_budget) {
    free = *policy.disk_budget;
  } else if (free_bytes) {
    free = *free_bytes;
  } else {
    free = free_space(policy.cache ? policy.cache_dir : policy.checkpoint_dir);
  }
  if (policy.checkpoint == CheckpointMode::Auto) {
    if (free >= plan.cache_bytes) {
      // Enough room for every stage: caches already make the run resumable.
      out.checkpoint = !policy.cache;
    } else if (free >= plan.checkpoint_peak_bytes) {
      if (policy.cache) {
        out.warnings.push_back("free space " + format_size(free) + " is below the cache requirement " +
                               format_size(plan.cache_bytes) + "; caching disabled, checkpointing instead");
      }
      out.cache = false;
      out.checkpoint = true;
    } else {
      out.cache = false;
      out.checkpoint = false;
      out.warnings.push_back("free space " + format_size(free) + " is below the checkpoint peak " +
                             format_size(plan.checkpoint_peak_bytes) + "; cache and checkpoints disabled");
    }
  } else if (out.cache && policy.disk_budget && *policy.disk_budget < plan.cache_bytes) {
    out.warnings.push_back("disk budget " + format_size(*policy.disk_budget) + " is below the cache requirement " +
                           format_size(plan.cache_bytes) + "; older stages are evicted per keep_last_k");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache store

namespace {

struct EntryName {
  std::size_t stage = 0;
  std::string fp;
};

std::optional<EntryName> parse_entry(const fs::path& p, std::string_view ext) {
  if (p.extension() != ext) return std::nullopt;
  std::string stem = p.stem().string();
  auto us = stem.find('_');
  if (us == std::string::npos) return std::nullopt;
  EntryName e;
  auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + us, e.stage);
  if (ec != std::errc() || ptr != stem.data() + us) return std::nullopt;
  e.fp = stem.substr(us + 1);
  return e;
}

std::uint64_t dir_bytes(const fs::path& dir) {
  std::uint64_t total = 0;
  std::error_code ec;
  if (!fs::exists(dir, ec)) return 0;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file(ec)) total += entry.file_size(ec);
  }
  return total;
}

}  // namespace

CacheStore::CacheStore(fs::path dir, const Fingerprint& root, Codec codec, std::optional<std::size_t> keep_last_k)
    : ns_(std::move(dir) / root.hex()), codec_(codec), keep_(keep_last_k) {
  if (keep_ && *keep_ == 0) throw ParamError("keep_last_k_caches must be positive or 'all'");
}

fs::path CacheStore::entry_path(std::size_t stage, const Fingerprint& fp) const {
  return ns_ / (std::to_string(stage) + "_" + fp.hex() + ".djc");
}

bool CacheStore::contains(std::size_t stage, const Fingerprint& fp) const {
  std::error_code ec;
  return fs::exists(entry_path(stage, fp), ec);
}

std::optional<Dataset> CacheStore::lookup(std::size_t stage, const Fingerprint& fp) const {
  fs::path path = entry_path(stage, fp);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    auto c = decode_container(read_file(path));
    if (c.fingerprint != fp) throw CorruptCache("header fingerprint does not match file name");
    return std::move(c.dataset);
  } catch (const CorruptCache& e) {
    log::warn("cache entry {} is corrupt ({}); treating as a miss", path.string(), e.what());
    fs::remove(path, ec);
    return std::nullopt;
  }
}

void CacheStore::store(std::size_t stage, const Fingerprint& fp, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(ns_, ec);
  if (ec) throw IoError("cannot create cache directory '" + ns_.string() + "': " + ec.message());
  fs::path target = entry_path(stage, fp);
  for (const auto& entry : fs::directory_iterator(ns_, ec)) {
    auto name = parse_entry(entry.path(), ".djc");
    if (name && name->stage == stage && entry.path() != target) fs::remove(entry.path(), ec);
  }
  write_file_atomic(target, encode_container(dataset, fp, codec_));
}

void CacheStore::evict(std::size_t current) {
  if (!keep_) return;
  std::error_code ec;
  if (!fs::exists(ns_, ec)) return;
  for (const auto& entry : fs::directory_iterator(ns_, ec)) {
    auto name = parse_entry(entry.path(), ".djc");
    if (name && name->stage + *keep_ <= current) fs::remove(entry.path(), ec);
  }
}

std::uint64_t CacheStore::disk_bytes() const { return dir_bytes(ns_); }

// ---------------------------------------------------------------------------
// Checkpoints

CheckpointStore::CheckpointStore(fs::path dir, std::string run_id, Codec codec)
    : dir_(std::move(dir) / std::move(run_id)), codec_(codec) {}

std::vector<fs::path> CheckpointStore::files() const {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::exists(dir_, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (entry.path().extension() == ".djk") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void CheckpointStore::write(std::size_t completed_stages, const Dataset& dataset, const Fingerprint& plan_fp) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create checkpoint directory '" + dir_.string() + "': " + ec.message());
  std::string name = "ckpt_" + std::to_string(completed_stages) + ".djk";
  write_file_atomic(dir_ / name, encode_container(dataset, plan_fp, codec_));
  Json manifest = {{"plan_fp", plan_fp.hex()}, {"stage", completed_stages}, {"file", name}};
  write_file_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& old : files()) {
    if (old.filename() != name) fs::remove(old, ec);
  }
}

std::optional<CheckpointState> CheckpointStore::resume(const Fingerprint& plan_fp) {
  std::error_code ec;
  fs::path manifest_path = dir_ / "manifest.json";
  if (!fs::exists(manifest_path, ec)) return std::nullopt;
  try {
    Json manifest = Json::parse(read_file(manifest_path));
    auto recorded = Fingerprint::from_hex(manifest.at("plan_fp").get<std::string>());
    if (recorded != plan_fp) {
      log::warn("checkpoint in {} belongs to a different plan ({} != {}); restarting from scratch", dir_.string(),
                recorded.hex(), plan_fp.hex());
      clear();
      return std::nullopt;
    }
    auto c = decode_container(read_file(dir_ / manifest.at("file").get<std::string>()));
    if (c.fingerprint != plan_fp) throw CorruptCache("checkpoint header does not match manifest");
    CheckpointState st;
    st.stage = manifest.at("stage").get<std::size_t>();
    st.plan_fp = plan_fp;
    st.dataset = std::move(c.dataset);
    return st;
  } catch (const std::exception& e) {
    log::warn("checkpoint in {} is unusable ({}); restarting from scratch", dir_.string(), e.what());
    clear();
    return std::nullopt;
  }
}

void CheckpointStore::clear() {
  std::error_code ec;
  fs::remove_all(dir_, ec);
}

std::uint64_t CheckpointStore::disk_bytes() const { return dir_bytes(dir_); }

}  // namespace forge::state
