#include "dsrsd/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dsrsd/error.hpp"

namespace dsrsd {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'S', 'R', 'S', 'D', 'C', 'K', '1'};
constexpr int kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return s;
}

}  // namespace

Json model_config_json(const ModelConfig& c) {
  return Json{{"input_dim_a", c.input_dim_a},
              {"input_dim_b", c.input_dim_b},
              {"latent_dim", c.latent_dim},
              {"encoder_hidden", c.encoder_hidden},
              {"encoder_layers", c.encoder_layers},
              {"head_hidden", c.head_hidden},
              {"num_classes", c.num_classes},
              {"dropout", c.dropout},
              {"use_private_in_head", c.use_private_in_head},
              {"residual_shared", c.residual_shared},
              {"variant", std::string(variant_name(c.variant))}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.input_dim_a = j.at("input_dim_a").get<std::size_t>();
  c.input_dim_b = j.at("input_dim_b").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
  c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  c.head_hidden = j.at("head_hidden").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.use_private_in_head = j.at("use_private_in_head").get<bool>();
  c.residual_shared = j.at("residual_shared").get<bool>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const DsrsdModel& model, const Json& run_config) {
  Json params = Json::array();
  std::size_t count = 0;
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name}, {"rows", p.tensor.rows()}, {"cols", p.tensor.cols()}});
    count += p.tensor.value().size();
  }
  Json header;
  header["format"] = "dsrsd-checkpoint";
  header["version"] = kVersion;
  header["model"] = model_config_json(model.config());
  header["config_hash"] = hex64(config_hash(run_config));
  header["config"] = run_config;
  header["parameters"] = params;
  header["blob_bytes"] = count * 8;

  const std::string text = header.dump();
  std::string bytes(kMagic.begin(), kMagic.end());
  put_u64(bytes, text.size());
  bytes += text;
  bytes.reserve(bytes.size() + count * 8);
  for (const auto& p : model.parameters()) {
    for (double v : p.tensor.value().values()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
  }

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw DataError(where + "not a checkpoint file");
  }
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw DataError(where + "truncated header");

  Json header;
  ModelConfig config;
  try {
    header = Json::parse(bytes.substr(16, header_len));
    if (header.at("version").get<int>() != kVersion) {
      throw DataError(where + "unsupported version " + header.at("version").dump());
    }
    config = model_config_from_json(header.at("model"));
  } catch (const Json::exception& e) {
    throw DataError(where + "malformed header: " + e.what());
  }

  LoadedCheckpoint ck{DsrsdModel(config, 0), header.value("config", Json::object()), 0};
  const std::string hash_text = header.value("config_hash", std::string());
  ck.config_hash = hash_text.empty() ? 0 : std::stoull(hash_text, nullptr, 16);

  const Json& listed = header.at("parameters");
  const auto& params = ck.model.parameters();
  if (listed.size() != params.size()) throw DataError(where + "parameter count does not match the model");
  std::size_t offset = 16 + header_len;
  std::vector<Matrix> values;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& t = params[k].tensor;
    if (listed[k].at("name").get<std::string>() != params[k].name ||
        listed[k].at("rows").get<std::size_t>() != t.rows() || listed[k].at("cols").get<std::size_t>() != t.cols()) {
      throw DataError(where + "parameter " + std::to_string(k) + " does not match " + params[k].name);
    }
    Matrix m(t.rows(), t.cols());
    if (bytes.size() < offset + m.size() * 8) throw DataError(where + "truncated parameter blob");
    for (double& v : m.values()) {
      v = std::bit_cast<double>(get_u64(bytes.data() + offset));
      offset += 8;
    }
    values.push_back(std::move(m));
  }
  if (offset != bytes.size()) throw DataError(where + "trailing bytes after parameter blob");
  ck.model.restore(values);
  return ck;
}

}  // namespace dsrsd
