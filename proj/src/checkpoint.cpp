#include "fsce/models/checkpoint.hpp"

#include "fsce/config.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fsce {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'C', 'E', 'C', 'K', 'P', 'T'};
constexpr int kFormatVersion = 1;

void write_u64_le(std::ofstream& os, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  os.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint64_t read_u64_le(std::ifstream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

void write_blob(std::ofstream& os, const Tensor& t) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(t.data()), t.size() * 8);
  } else {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, t.data() + i, 8);
      bits = __builtin_bswap64(bits);
      os.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
}

void read_blob(std::ifstream& is, Tensor& t) {
  is.read(reinterpret_cast<char*>(t.data()), t.size() * 8);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, t.data() + i, 8);
      bits = __builtin_bswap64(bits);
      std::memcpy(t.data() + i, &bits, 8);
    }
  }
}

struct NamedTensor {
  std::string name;
  const Tensor* tensor;
};

void write_checkpoint_file(const std::filesystem::path& path, nlohmann::ordered_json header,
                           const std::vector<NamedTensor>& arrays) {
  header["format_version"] = kFormatVersion;
  header["params"] = nlohmann::ordered_json::array();
  for (const auto& a : arrays) {
    nlohmann::ordered_json pj;
    pj["name"] = a.name;
    pj["shape"] = a.tensor->shape();
    header["params"].push_back(pj);
  }
  header["config_hash"] = config_hash(header);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic, 8);
  const std::string hs = header.dump();
  write_u64_le(os, hs.size());
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& a : arrays) write_blob(os, *a.tensor);
  if (!os) throw std::runtime_error("write failure on checkpoint " + path.string());
}

nlohmann::json read_header(std::ifstream& is, const std::filesystem::path& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  const std::uint64_t len = read_u64_le(is);
  std::string hs(len, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("truncated checkpoint header: " + path.string());
  nlohmann::json h = nlohmann::json::parse(hs);
  if (h.at("format_version").get<int>() != kFormatVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  return h;
}

std::vector<NamedTensor> fsl_arrays(FSLModel& model) {
  std::vector<NamedTensor> arrays;
  for (auto& p : model.parameters()) arrays.push_back({p.name, p.tensor});
  if (model.loss_kind == LossKind::BceScaled) {
    arrays.push_back({"loss.bce_lo", &model.bce_lo});
    arrays.push_back({"loss.bce_hi", &model.bce_hi});
  }
  return arrays;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FSLModel& model) {
  nlohmann::ordered_json header;
  header["kind"] = model_kind_name(model.kind);
  header["loss"] = loss_kind_name(model.loss_kind);
  header["model"] = model_config_to_json(model.cfg);
  FSLModel& m = const_cast<FSLModel&>(model);  // parameter enumeration only
  write_checkpoint_file(path, std::move(header), fsl_arrays(m));
}

void save_checkpoint(const std::filesystem::path& path, const SwitchNetParams& params) {
  nlohmann::ordered_json header;
  header["kind"] = "switchnet";
  header["width"] = params.width;
  header["m"] = params.m();
  SwitchNetParams& p = const_cast<SwitchNetParams&>(params);
  std::vector<NamedTensor> arrays = {{"w0", &p.w0}, {"b0", &p.b0}};
  for (int i = 1; i <= p.m(); ++i) {
    arrays.push_back({"w" + std::to_string(i), &p.w[static_cast<std::size_t>(i - 1)]});
    arrays.push_back({"b" + std::to_string(i), &p.b[static_cast<std::size_t>(i - 1)]});
  }
  arrays.push_back({"alpha", &p.alpha});
  write_checkpoint_file(path, std::move(header), arrays);
}

bool checkpoint_is_switchnet(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  return read_header(is, path).at("kind").get<std::string>() == "switchnet";
}

FSLModel load_fsl_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  nlohmann::json h = read_header(is, path);
  const std::string kind = h.at("kind").get<std::string>();
  if (kind == "switchnet")
    throw std::runtime_error("checkpoint " + path.string() + " holds a switchnet model");

  FSLModel model = FSLModel::init(model_kind_from_name(kind),
                                  model_config_from_json(h.at("model")), 0);
  model.loss_kind = loss_kind_from_name(h.at("loss").get<std::string>());
  if (model.loss_kind == LossKind::BceScaled) {
    model.bce_lo = Tensor::zeros({model.cfg.width, 2});
    model.bce_hi = Tensor::zeros({model.cfg.width, 2});
  }
  auto arrays = fsl_arrays(model);
  const auto& params = h.at("params");
  if (params.size() != arrays.size())
    throw std::runtime_error("checkpoint " + path.string() + " has unexpected parameter count");
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const auto& pj = params[i];
    if (pj.at("name").get<std::string>() != arrays[i].name)
      throw std::runtime_error("checkpoint parameter order mismatch at '" + arrays[i].name + "'");
    if (pj.at("shape").get<Shape>() != arrays[i].tensor->shape())
      throw std::runtime_error("checkpoint shape mismatch at '" + arrays[i].name + "'");
    read_blob(is, *const_cast<Tensor*>(arrays[i].tensor));
  }
  if (!is) throw std::runtime_error("truncated checkpoint blob: " + path.string());
  return model;
}

SwitchNetParams load_switchnet_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  nlohmann::json h = read_header(is, path);
  if (h.at("kind").get<std::string>() != "switchnet")
    throw std::runtime_error("checkpoint " + path.string() + " is not a switchnet model");
  SwitchNetParams p = SwitchNetParams::init(h.at("width").get<int>(), h.at("m").get<int>(), 0);
  std::vector<NamedTensor> arrays = {{"w0", &p.w0}, {"b0", &p.b0}};
  for (int i = 1; i <= p.m(); ++i) {
    arrays.push_back({"w" + std::to_string(i), &p.w[static_cast<std::size_t>(i - 1)]});
    arrays.push_back({"b" + std::to_string(i), &p.b[static_cast<std::size_t>(i - 1)]});
  }
  arrays.push_back({"alpha", &p.alpha});
  for (auto& a : arrays) read_blob(is, *const_cast<Tensor*>(a.tensor));
  if (!is) throw std::runtime_error("truncated checkpoint blob: " + path.string());
  return p;
}

}  // namespace fsce
