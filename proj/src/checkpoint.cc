// ctccrf/checkpoint.cc

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "ctccrf/model.h"

namespace ctccrf::am {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'C', 'C', 'R', 'F', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

void PutU32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t GetU32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) throw DataError("checkpoint: truncated");
  return v;
}

}  // namespace

void AcousticModel::Save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  PutU32(os, kVersion);
  PutU32(os, static_cast<std::uint32_t>(layers_.size()));
  for (const LayerSpec& l : layers_) {
    PutU32(os, static_cast<std::uint32_t>(l.kind));
    PutU32(os, static_cast<std::uint32_t>(l.in));
    PutU32(os, static_cast<std::uint32_t>(l.out));
    PutU32(os, l.bidirectional ? 1u : 0u);
  }
  PutU32(os, static_cast<std::uint32_t>(params_.size()));
  std::vector<float> buf;
  for (const Matrix& p : params_) {
    PutU32(os, static_cast<std::uint32_t>(p.rows()));
    PutU32(os, static_cast<std::uint32_t>(p.cols()));
    buf.resize(p.size());
    for (Eigen::Index k = 0; k < p.size(); ++k) buf[k] = static_cast<float>(p.data()[k]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

AcousticModel AcousticModel::Load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  if (GetU32(is) != kVersion) throw DataError("checkpoint: unsupported version");
  const std::uint32_t num_layers = GetU32(is);
  if (num_layers == 0 || num_layers > 1024) throw DataError("checkpoint: bad layer count");
  AcousticModel model;
  for (std::uint32_t i = 0; i < num_layers; ++i) {
    LayerSpec l;
    const std::uint32_t kind = GetU32(is);
    if (kind < 1 || kind > 3) throw DataError("checkpoint: unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.in = static_cast<int>(GetU32(is));
    l.out = static_cast<int>(GetU32(is));
    l.bidirectional = GetU32(is) != 0;
    model.layers_.push_back(l);
  }
  model.Validate();
  // Shapes come from the layer specs; stored shapes must agree.
  AcousticModel shaped(model.layers_, 0);
  if (GetU32(is) != shaped.params_.size()) throw DataError("checkpoint: parameter count mismatch");
  std::vector<float> buf;
  for (Matrix& p : shaped.params_) {
    if (GetU32(is) != p.rows() || GetU32(is) != p.cols()) {
      throw DataError("checkpoint: tensor shape mismatch");
    }
    buf.resize(p.size());
    if (!is.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
      throw DataError("checkpoint: truncated tensor");
    }
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = buf[k];
  }
  return shaped;
}

void AcousticModel::SaveFile(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  Save(os);
}

AcousticModel AcousticModel::LoadFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return Load(is);
}

}  // namespace ctccrf::am
