#include "zggp/neural/model_io.hpp"

#include <fstream>
#include <sstream>

#include "zggp/binary_io.hpp"
#include "zggp/error.hpp"

namespace zggp {
namespace {

constexpr char kMagic[9] = "ZGGPMDL1";

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorKind::kCorruptModel, why);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!binio::read_int(in, v)) corrupt("truncated config");
  return v;
}

}  // namespace

void serialize_model(const ValueNet& net, std::ostream& out) {
  out.write(kMagic, 8);
  binio::write_int(out, static_cast<std::uint8_t>(net.architecture()));
  if (const auto* a = std::get_if<AttentionNetConfig>(&net.config())) {
    for (std::uint32_t v :
         {a->embed_dim, a->heads, a->layers, a->ff_dim,
          static_cast<std::uint32_t>(a->positional), a->feature_dim,
          a->max_tiles}) {
      binio::write_int(out, v);
    }
  } else {
    const auto& c = std::get<ConvNetConfig>(net.config());
    for (std::uint32_t v : {c.channels, c.conv_layers, c.kernel, c.grid_height,
                            c.grid_width, c.feature_dim}) {
      binio::write_int(out, v);
    }
  }
  const auto& params = net.params();
  const auto& layout = params.layout();
  for (std::size_t i = 0; i < layout.count(); ++i) {
    const ParamSpec& spec = layout[i];
    binio::write_short_string(out, spec.name);
    binio::write_int(out, static_cast<std::uint8_t>(spec.shape.size()));
    for (int dim : spec.shape) {
      binio::write_int(out, static_cast<std::uint32_t>(dim));
    }
    for (float v : params.view(i)) binio::write_f32(out, v);
  }
}

std::vector<std::uint8_t> serialize_model(const ValueNet& net) {
  std::ostringstream os(std::ios::binary);
  serialize_model(net, os);
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

ValueNet deserialize_model(std::istream& in) {
  if (!binio::read_magic(in, kMagic)) corrupt("bad magic");
  std::uint8_t tag = 0;
  if (!binio::read_int(in, tag)) corrupt("truncated header");
  NetConfig config;
  if (tag == static_cast<std::uint8_t>(Architecture::kAttention)) {
    AttentionNetConfig a;
    a.embed_dim = read_u32(in);
    a.heads = read_u32(in);
    a.layers = read_u32(in);
    a.ff_dim = read_u32(in);
    a.positional = static_cast<PositionalMode>(read_u32(in));
    a.feature_dim = read_u32(in);
    a.max_tiles = read_u32(in);
    config = a;
  } else if (tag == static_cast<std::uint8_t>(Architecture::kConv)) {
    ConvNetConfig c;
    c.channels = read_u32(in);
    c.conv_layers = read_u32(in);
    c.kernel = read_u32(in);
    c.grid_height = read_u32(in);
    c.grid_width = read_u32(in);
    c.feature_dim = read_u32(in);
    config = c;
  } else {
    corrupt("unknown architecture tag " + std::to_string(tag));
  }

  ParamLayout layout;
  try {
    layout = make_layout(config);
  } catch (const Error& e) {
    corrupt(std::string("invalid config: ") + e.what());
  }
  ParamSet<float> params(layout);
  for (std::size_t i = 0; i < layout.count(); ++i) {
    const ParamSpec& spec = layout[i];
    std::string name;
    if (!binio::read_short_string(in, name)) corrupt("truncated tensor name");
    if (name != spec.name) {
      corrupt("expected tensor '" + spec.name + "', found '" + name + "'");
    }
    std::uint8_t rank = 0;
    if (!binio::read_int(in, rank)) corrupt("truncated tensor rank");
    if (rank != spec.shape.size()) corrupt("rank mismatch for " + name);
    for (int dim : spec.shape) {
      if (read_u32(in) != static_cast<std::uint32_t>(dim)) {
        corrupt("shape mismatch for " + name);
      }
    }
    for (float& v : params.view(i)) {
      if (!binio::read_f32(in, v)) corrupt("truncated values for " + name);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) corrupt("trailing bytes");
  return ValueNet(config, std::move(params));
}

ValueNet deserialize_model(const std::vector<std::uint8_t>& bytes) {
  std::istringstream is(std::string(bytes.begin(), bytes.end()),
                        std::ios::binary);
  return deserialize_model(is);
}

void save_model(const ValueNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  serialize_model(net, out);
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

ValueNet load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  return deserialize_model(in);
}

}  // namespace zggp
