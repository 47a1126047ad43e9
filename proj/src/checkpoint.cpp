#include "detmask/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "detmask/error.hpp"

namespace detmask {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in host order");

namespace {
constexpr char kMagic[8] = {'D', 'M', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state,
                     const Vocabulary& vocab) {
  if (vocab.size() != state.config.vocab_size)
    throw Error("vocabulary size does not match model config");
  nlohmann::ordered_json header;
  header["format"] = "detmask-checkpoint";
  header["version"] = 1;
  header["dtype"] = "f64le";
  const auto& c = state.config;
  header["config"] = {{"vocab_size", c.vocab_size}, {"d", c.d},
                      {"hidden", c.hidden},         {"max_len", c.max_len},
                      {"seed", c.seed},             {"lambda_con", c.lambda_con},
                      {"lambda_cls", c.lambda_cls}};
  header["vocab"] = vocab.tokens();
  auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : state.layout) {
    tensors.push_back(
        {{"name", t.name}, {"shape", t.shape}, {"offset", t.offset * sizeof(double)}});
  }
  const auto text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint64_t length = text.size();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(state.params.data()),
            static_cast<std::streamsize>(state.params.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  std::uint64_t length = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(path.string() + ": not a detmask checkpoint");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(path.string() + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": bad header: " + e.what());
  }
  if (header.value("version", 0) != 1)
    throw Error(path.string() + ": unsupported checkpoint version");

  ModelConfig config;
  const auto& c = header.at("config");
  config.vocab_size = c.at("vocab_size");
  config.d = c.at("d");
  config.hidden = c.at("hidden");
  config.max_len = c.at("max_len");
  config.seed = c.at("seed");
  config.lambda_con = c.at("lambda_con");
  config.lambda_cls = c.at("lambda_cls");

  Checkpoint ckpt{zero_state(config),
                  Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>())};
  const auto& tensors = header.at("tensors");
  if (tensors.size() != ckpt.state.layout.size())
    throw Error(path.string() + ": tensor table does not match config");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& want = ckpt.state.layout[i];
    if (tensors[i].at("name") != want.name ||
        tensors[i].at("shape").get<std::vector<std::size_t>>() != want.shape ||
        tensors[i].at("offset").get<std::size_t>() != want.offset * sizeof(double))
      throw Error(path.string() + ": tensor " + want.name + " does not match config");
  }
  in.read(reinterpret_cast<char*>(ckpt.state.params.data()),
          static_cast<std::streamsize>(ckpt.state.params.size() * sizeof(double)));
  if (!in) throw Error(path.string() + ": truncated payload");
  if (ckpt.vocab.size() != config.vocab_size)
    throw Error(path.string() + ": vocabulary size does not match config");
  return ckpt;
}

}  // namespace detmask
