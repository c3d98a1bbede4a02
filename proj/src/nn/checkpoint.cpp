#include "eegdiff/nn/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <map>

#include "eegdiff/bytes.hpp"
#include "eegdiff/errors.hpp"

namespace eegdiff::nn {

namespace {

constexpr std::uint16_t kVersion = 1;

void put_tensor(std::string& out, const std::string& name, const Shape& shape, std::span<const double> values) {
  if (name.size() > UINT16_MAX) throw DataError("checkpoint: tensor name too long");
  if (shape.size() > UINT8_MAX) throw DataError("checkpoint: rank too large for '" + name + "'");
  bytes::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out += name;
  bytes::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) bytes::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : values) bytes::put_le<float>(out, static_cast<float>(v));
}

StoredTensor get_tensor(bytes::Reader& r) {
  StoredTensor t;
  const auto len = r.get<std::uint16_t>("tensor name length");
  t.name = r.get_bytes(len, "tensor name");
  const auto rank = r.get<std::uint8_t>("tensor rank");
  for (int i = 0; i < rank; ++i) t.shape.push_back(r.get<std::uint32_t>("tensor dim"));
  const auto n = shape_numel(t.shape);
  if (r.remaining() / sizeof(float) < n) r.fail("truncated data for tensor '" + t.name + "'", r.pos());
  t.values.resize(n);
  for (auto& v : t.values) {
    const auto at = r.pos();
    const float f = r.get<float>("tensor value");
    if (!std::isfinite(f)) r.fail("non-finite value in tensor '" + t.name + "'", at);
    v = f;
  }
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& model, const AdamState* optimizer) {
  std::string out = "EDNN";
  bytes::put_le<std::uint16_t>(out, kVersion);
  bytes::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.params.size() + model.buffers.size()));
  for (const auto* list : {&model.params, &model.buffers}) {
    for (const auto& p : *list) put_tensor(out, p.name, p.tensor.shape(), p.tensor.data());
  }
  if (optimizer) {
    out += "OPT1";
    bytes::put_le<std::int64_t>(out, optimizer->step_count);
    bytes::put_le<double>(out, optimizer->lr);
    bytes::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(2 * optimizer->first_moment.size()));
    for (std::size_t i = 0; i < optimizer->first_moment.size(); ++i) {
      const auto& name = optimizer->names[i];
      const Shape s{optimizer->first_moment[i].size()};
      put_tensor(out, name + ".m", s, optimizer->first_moment[i]);
      put_tensor(out, name + ".v", s, optimizer->second_moment[i]);
    }
  }
  bytes::write_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  bytes::Reader r(bytes::read_file(path), path.string());
  if (r.get_bytes(4, "magic") != "EDNN") r.fail("bad magic", 0);
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version), 4);
  Checkpoint ckpt;
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) ckpt.tensors.push_back(get_tensor(r));
  if (r.remaining() > 0) {
    const auto at = r.pos();
    if (r.get_bytes(4, "section tag") != "OPT1") r.fail("unknown section tag", at);
    AdamState st;
    st.step_count = r.get<std::int64_t>("step count");
    st.lr = r.get<double>("learning rate");
    const auto n = r.get<std::uint32_t>("moment count");
    if (n % 2 != 0) r.fail("odd moment count", r.pos());
    for (std::uint32_t i = 0; i < n / 2; ++i) {
      auto m = get_tensor(r);
      auto v = get_tensor(r);
      if (m.name.size() < 2 || m.name.substr(m.name.size() - 2) != ".m") r.fail("expected first moment", r.pos());
      st.names.push_back(m.name.substr(0, m.name.size() - 2));
      st.first_moment.push_back(std::move(m.values));
      st.second_moment.push_back(std::move(v.values));
    }
    ckpt.optimizer = std::move(st);
  }
  if (r.remaining() != 0) r.fail("trailing bytes", r.pos());
  return ckpt;
}

void restore(const Checkpoint& ckpt, const ParamSet& model) {
  std::map<std::string, const StoredTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  for (const auto* list : {&model.params, &model.buffers}) {
    for (auto p : *list) {
      auto it = by_name.find(p.name);
      if (it == by_name.end()) throw DataError("checkpoint: missing tensor '" + p.name + "'");
      if (it->second->shape != p.tensor.shape()) {
        throw DataError("checkpoint: tensor '" + p.name + "' has shape " + shape_str(it->second->shape) +
                        ", model expects " + shape_str(p.tensor.shape()));
      }
      auto dst = p.tensor.mutable_data();
      std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
    }
  }
}

}  // namespace eegdiff::nn
