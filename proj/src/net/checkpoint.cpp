// GCDL container: "GCDL", u32 version, then records of
//   u16 name length, name, u8 scalar kind, u8 rank, u32 dims[rank], payload.
#include <fstream>
#include <map>

#include "groupcdl/core/io.hpp"
#include "groupcdl/net/network.hpp"

namespace gcdl {

namespace {

constexpr std::uint32_t kVersion = 1;

struct Record {
  ScalarKind kind = ScalarKind::f64;
  std::vector<std::uint32_t> dims;
  std::vector<Real> values;  // interleaved for complex kinds
};

void write_record(std::ostream& os, const std::string& name, ScalarKind kind, const std::vector<std::uint32_t>& dims,
                  std::span<const Real> values) {
  require(name.size() < 65536, "checkpoint: record name too long");
  binio::write_u16(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  binio::write_u8(os, static_cast<std::uint8_t>(kind));
  binio::write_u8(os, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) binio::write_u32(os, d);
  binio::write_payload(os, values, kind);
}

std::map<std::string, Record> read_records(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint: " + path.string());
  binio::expect_magic(is, "GCDL");
  const auto version = binio::read_u32(is);
  require(version == kVersion, "checkpoint: unsupported version " + std::to_string(version));
  std::map<std::string, Record> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = binio::read_u16(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw ValidationError("checkpoint: truncated record name");
    Record r;
    const auto code = binio::read_u8(is);
    require(code >= 1 && code <= 4, "checkpoint: unknown scalar kind in " + name);
    r.kind = static_cast<ScalarKind>(code);
    const auto rank = binio::read_u8(is);
    std::size_t count = 1;
    for (int i = 0; i < rank; ++i) {
      r.dims.push_back(binio::read_u32(is));
      count *= r.dims.back();
    }
    require(count < (std::size_t{1} << 32), "checkpoint: record too large");
    r.values = binio::read_payload(is, count, r.kind);
    require(out.emplace(name, std::move(r)).second, "checkpoint: duplicate record " + name);
  }
  return out;
}

Real hyper_value(const std::map<std::string, Record>& recs, const std::string& key) {
  const auto it = recs.find("hyper." + key);
  require(it != recs.end() && it->second.values.size() == 1, "checkpoint: missing hyper." + key);
  return it->second.values[0];
}

std::vector<std::pair<std::string, Real>> hyper_fields(const NetHyper& h) {
  return {{"p", h.p},
          {"K", h.K},
          {"M", h.M},
          {"Mh", h.Mh},
          {"W", h.W},
          {"dK", h.dK},
          {"stride", h.stride},
          {"channels", h.channels},
          {"mode", h.mode == ThresholdMode::group ? 0.0 : 1.0},
          {"sigma_scale", h.sigma_scale}};
}

}  // namespace

template <Scalar T>
void save_checkpoint(const std::filesystem::path& path, const GroupCdlParams<T>& params, const ExtraTensors& extra) {
  params.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  binio::write_magic(os, "GCDL");
  binio::write_u32(os, kVersion);
  for (const auto& [key, v] : hyper_fields(params.hyper)) {
    const Real val = v;
    write_record(os, "hyper." + key, ScalarKind::f64, {}, std::span<const Real>(&val, 1));
  }
  params.for_each_tensor([&](const TensorRef& r) {
    write_record(os, r.name, r.complex ? ScalarKind::c128 : ScalarKind::f64, r.dims, r.data);
  });
  for (const auto& [name, values] : extra)
    write_record(os, name, ScalarKind::f64, {static_cast<std::uint32_t>(values.size())}, values);
  if (!os) throw ValidationError("checkpoint: write failed for " + path.string());
}

template <Scalar T>
GroupCdlParams<T> load_checkpoint(const std::filesystem::path& path, ExtraTensors* extra) {
  auto recs = read_records(path);
  NetHyper h;
  h.p = static_cast<int>(hyper_value(recs, "p"));
  h.K = static_cast<int>(hyper_value(recs, "K"));
  h.M = static_cast<int>(hyper_value(recs, "M"));
  h.Mh = static_cast<int>(hyper_value(recs, "Mh"));
  h.W = static_cast<int>(hyper_value(recs, "W"));
  h.dK = static_cast<int>(hyper_value(recs, "dK"));
  h.stride = static_cast<int>(hyper_value(recs, "stride"));
  h.channels = static_cast<int>(hyper_value(recs, "channels"));
  h.mode = hyper_value(recs, "mode") == 0.0 ? ThresholdMode::group : ThresholdMode::elementwise;
  h.sigma_scale = hyper_value(recs, "sigma_scale");
  h.validate();

  // shapes come from a fresh init; values are overwritten below
  const ConvFilterBank<T> d0(h.M, h.channels, h.p, h.stride, ConvRole::synthesis);
  GroupCdlParams<T> params = init_ista(d0, h);
  params.for_each_tensor([&](const TensorRef& r) {
    const auto it = recs.find(r.name);
    require(it != recs.end(), "checkpoint: missing tensor " + r.name);
    const Record& rec = it->second;
    require(scalar_kind_is_complex(rec.kind) == r.complex, "checkpoint: scalar kind mismatch for " + r.name);
    require(rec.dims == r.dims && rec.values.size() == r.data.size(), "checkpoint: shape mismatch for " + r.name);
    std::copy(rec.values.begin(), rec.values.end(), r.data.begin());
    recs.erase(it);
  });
  if (extra) {
    extra->clear();
    for (auto& [name, rec] : recs)
      if (name.rfind("hyper.", 0) != 0) extra->emplace_back(name, std::move(rec.values));
  }
  params.validate();
  return params;
}

bool checkpoint_is_complex(const std::filesystem::path& path) {
  const auto recs = read_records(path);
  const auto it = recs.find("d");
  require(it != recs.end(), "checkpoint: missing tensor d");
  return scalar_kind_is_complex(it->second.kind);
}

template void save_checkpoint(const std::filesystem::path&, const GroupCdlParams<Real>&, const ExtraTensors&);
template void save_checkpoint(const std::filesystem::path&, const GroupCdlParams<Complex>&, const ExtraTensors&);
template GroupCdlParams<Real> load_checkpoint<Real>(const std::filesystem::path&, ExtraTensors*);
template GroupCdlParams<Complex> load_checkpoint<Complex>(const std::filesystem::path&, ExtraTensors*);

}  // namespace gcdl
