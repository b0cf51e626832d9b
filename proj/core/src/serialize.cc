// Copyright 2026 The bnrect Authors.
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

#include "bnrect/serialize.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "bnrect/errors.h"
#include "io_util.h"

namespace bnrect {
namespace {

using KeyValues = std::map<std::string, std::string, std::less<>>;

std::string shape_text(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" +
         std::to_string(s.h) + "x" + std::to_string(s.w);
}

const std::string& require(const KeyValues& kv, std::string_view key,
                           std::string_view where) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw FormatError("manifest " + std::string(where) + " is missing key '" +
                      std::string(key) + "'");
  }
  return it->second;
}

int require_int(const KeyValues& kv, std::string_view key, std::string_view where) {
  return io::parse_int(require(kv, key, where), key);
}

float require_float(const KeyValues& kv, std::string_view key, std::string_view where) {
  return io::parse_float(require(kv, key, where), key);
}

struct LayerBlock {
  std::string name;
  KeyValues values;
  std::vector<std::string> params;
};

}  // namespace

std::filesystem::path model_base(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".manifest" || ext == ".blob") {
    std::filesystem::path base = path;
    base.replace_extension();
    return base;
  }
  return path;
}

std::string manifest_text(const ModelGraph& model) {
  std::ostringstream os;
  const ModelMetadata& md = model.metadata();
  const ImageShape& in = model.input_shape();
  os << kManifestMagic << ' ' << kManifestVersion << '\n';
  os << "preset=" << md.preset << '\n';
  os << "flavor=" << to_string(model.flavor()) << '\n';
  os << "input=" << in.c << ',' << in.h << ',' << in.w << '\n';
  os << "classes=" << model.num_classes() << '\n';
  os << "epsilon=" << io::format_float(md.epsilon) << '\n';
  os << "momentum=" << io::format_float(md.momentum) << '\n';
  os << "seed=" << md.seed << '\n';
  os << "init=" << md.init << '\n';
  os << "rng=" << md.rng << '\n';
  for (const auto& [key, value] : md.notes) {
    os << "note." << io::sanitize_line(key) << '=' << io::sanitize_line(value) << '\n';
  }
  os << "layers=" << model.layers().size() << '\n';
  os << "blob_floats=" << model.parameter_count(false) << '\n';

  std::vector<std::vector<std::string>> params(model.layers().size());
  model.visit_parameters([&](const ParamInfo& info, std::span<const float>) {
    params[info.layer_index].push_back(info.name + " " + shape_text(info.shape));
  });
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& layer = model.layers()[i];
    os << "[layer " << layer_name(layer) << "]\n";
    os << "kind=" << layer_kind(layer) << '\n';
    if (const auto* l = std::get_if<ConvLayer>(&layer)) {
      os << "in_channels=" << l->in_channels << "\nout_channels=" << l->out_channels
         << "\nkernel=" << l->kernel << "\nstride=" << l->stride
         << "\npadding=" << l->padding << "\nbias=" << (l->bias.empty() ? 0 : 1)
         << '\n';
    } else if (const auto* l = std::get_if<BatchNormLayer>(&layer)) {
      os << "channels=" << l->state.channels()
         << "\nepsilon=" << io::format_float(l->state.epsilon)
         << "\nmomentum=" << io::format_float(l->state.momentum) << '\n';
    } else if (const auto* l = std::get_if<GroupNormLayer>(&layer)) {
      os << "channels=" << l->gamma.size() << "\ngroups=" << l->groups
         << "\nepsilon=" << io::format_float(l->epsilon) << '\n';
    } else if (const auto* l = std::get_if<InstanceNormLayer>(&layer)) {
      os << "channels=" << l->gamma.size()
         << "\nepsilon=" << io::format_float(l->epsilon) << '\n';
    } else if (const auto* l = std::get_if<AvgPoolLayer>(&layer)) {
      os << "kernel=" << l->kernel << '\n';
    } else if (const auto* l = std::get_if<DenseLayer>(&layer)) {
      os << "in_features=" << l->in_features << "\nout_features=" << l->out_features
         << '\n';
    }
    for (const std::string& p : params[i]) os << "param=" << p << '\n';
    os << "[end]\n";
  }
  return os.str();
}

std::string blob_bytes(const ModelGraph& model) {
  std::string out;
  out.reserve(model.parameter_count(false) * 4);
  model.visit_parameters([&](const ParamInfo&, std::span<const float> data) {
    for (float v : data) io::append_u32(out, std::bit_cast<std::uint32_t>(v));
  });
  return out;
}

ModelGraph parse_model(const std::string& manifest, const std::string& blob) {
  std::istringstream in(manifest);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest magic mismatch: empty manifest");
  {
    std::istringstream head(line);
    std::string magic;
    int version = -1;
    head >> magic >> version;
    if (magic != kManifestMagic) {
      throw FormatError("manifest magic mismatch: expected '" +
                        std::string(kManifestMagic) + "', found '" + magic + "'");
    }
    if (version != kManifestVersion) {
      throw FormatError("unsupported manifest version " + std::to_string(version));
    }
  }
  KeyValues header;
  std::vector<LayerBlock> blocks;
  LayerBlock* open = nullptr;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("[layer ", 0) == 0 && line.back() == ']') {
      if (open != nullptr) throw FormatError("manifest: nested [layer] block at line " + std::to_string(line_no));
      blocks.push_back(LayerBlock{line.substr(7, line.size() - 8), {}, {}});
      open = &blocks.back();
      continue;
    }
    if (line == "[end]") {
      if (open == nullptr) throw FormatError("manifest: stray [end] at line " + std::to_string(line_no));
      open = nullptr;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("manifest: malformed line " + std::to_string(line_no));
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (open != nullptr) {
      if (key == "param") {
        open->params.push_back(value);
      } else {
        open->values[key] = value;
      }
    } else {
      header[key] = value;
    }
  }
  if (open != nullptr) throw FormatError("manifest: unterminated [layer] block");

  ModelMetadata md;
  md.preset = require(header, "preset", "header");
  md.epsilon = require_float(header, "epsilon", "header");
  md.momentum = require_float(header, "momentum", "header");
  md.seed = io::parse_u64(require(header, "seed", "header"), "seed");
  md.init = require(header, "init", "header");
  md.rng = require(header, "rng", "header");
  for (const auto& [key, value] : header) {
    if (key.rfind("note.", 0) == 0) md.notes[key.substr(5)] = value;
  }
  const NormFlavor flavor = parse_norm_flavor(require(header, "flavor", "header"));
  const std::vector<int> dims = io::parse_int_list(require(header, "input", "header"), "input");
  if (dims.size() != 3) throw FormatError("manifest: input must list C,H,W");
  const ImageShape input{dims[0], dims[1], dims[2]};
  const int classes = require_int(header, "classes", "header");
  if (require_int(header, "layers", "header") != static_cast<int>(blocks.size())) {
    throw FormatError("manifest: layer count does not match layer blocks");
  }
  const std::uint64_t blob_floats = io::parse_u64(require(header, "blob_floats", "header"), "blob_floats");
  if (blob.size() != blob_floats * 4) {
    throw FormatError("blob length mismatch: manifest declares " +
                      std::to_string(blob_floats * 4) + " bytes, blob has " +
                      std::to_string(blob.size()));
  }

  std::vector<Layer> layers;
  for (const LayerBlock& b : blocks) {
    const std::string where = "layer " + b.name;
    const std::string& kind = require(b.values, "kind", where);
    if (kind == "conv") {
      ConvLayer l;
      l.name = b.name;
      l.in_channels = require_int(b.values, "in_channels", where);
      l.out_channels = require_int(b.values, "out_channels", where);
      l.kernel = require_int(b.values, "kernel", where);
      l.stride = require_int(b.values, "stride", where);
      l.padding = require_int(b.values, "padding", where);
      l.weight = Tensor(Shape{l.out_channels, l.in_channels, l.kernel, l.kernel});
      if (require_int(b.values, "bias", where) != 0) l.bias.assign(l.out_channels, 0.0f);
      layers.emplace_back(std::move(l));
    } else if (kind == "bn") {
      const int c = require_int(b.values, "channels", where);
      BNState s = BNState::fresh(c, require_float(b.values, "epsilon", where),
                                 require_float(b.values, "momentum", where));
      layers.emplace_back(BatchNormLayer{b.name, std::move(s)});
    } else if (kind == "gn") {
      const int c = require_int(b.values, "channels", where);
      layers.emplace_back(GroupNormLayer{b.name, require_int(b.values, "groups", where),
                                         std::vector<float>(c), std::vector<float>(c),
                                         require_float(b.values, "epsilon", where)});
    } else if (kind == "in") {
      const int c = require_int(b.values, "channels", where);
      layers.emplace_back(InstanceNormLayer{b.name, std::vector<float>(c),
                                            std::vector<float>(c),
                                            require_float(b.values, "epsilon", where)});
    } else if (kind == "relu") {
      layers.emplace_back(ReluLayer{b.name});
    } else if (kind == "avgpool") {
      layers.emplace_back(AvgPoolLayer{b.name, require_int(b.values, "kernel", where)});
    } else if (kind == "gap") {
      layers.emplace_back(GlobalAvgPoolLayer{b.name});
    } else if (kind == "dense") {
      DenseLayer l;
      l.name = b.name;
      l.in_features = require_int(b.values, "in_features", where);
      l.out_features = require_int(b.values, "out_features", where);
      l.weight = Tensor(Shape{l.out_features, l.in_features, 1, 1});
      l.bias.assign(l.out_features, 0.0f);
      layers.emplace_back(std::move(l));
    } else {
      throw FormatError("manifest: unknown layer kind '" + kind + "' in " + where);
    }
  }

  ModelGraph model(input, classes, flavor, std::move(md), std::move(layers));
  if (model.parameter_count(false) != blob_floats) {
    throw FormatError("blob length mismatch: layers require " +
                      std::to_string(model.parameter_count(false)) +
                      " floats, manifest declares " + std::to_string(blob_floats));
  }
  std::size_t offset = 0;
  std::vector<std::size_t> seen(blocks.size(), 0);
  model.visit_parameters([&](const ParamInfo& info, std::span<float> data) {
    const LayerBlock& b = blocks[info.layer_index];
    const std::size_t k = seen[info.layer_index]++;
    const std::string expected = info.name + " " + shape_text(info.shape);
    if (k >= b.params.size() || b.params[k] != expected) {
      throw FormatError("manifest: parameter order mismatch in layer " + b.name +
                        " (expected '" + expected + "')");
    }
    for (std::size_t i = 0; i < data.size(); ++i, offset += 4) {
      const float v = std::bit_cast<float>(io::read_u32(blob, offset));
      if (!std::isfinite(v)) {
        throw FormatError("non-finite parameter value in " + info.name + "[" +
                          std::to_string(i) + "]");
      }
      data[i] = v;
    }
  });
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (seen[i] != blocks[i].params.size()) {
      throw FormatError("manifest: layer " + blocks[i].name + " lists unexpected parameters");
    }
  }
  // Re-run validation now that statistics are loaded (pop_var >= 0 etc.).
  return ModelGraph(model.input_shape(), model.num_classes(), model.flavor(),
                    model.metadata(), model.layers());
}

void save_model(const ModelGraph& model, const std::filesystem::path& base_path) {
  const auto base = model_base(base_path);
  io::write_file(std::filesystem::path(base.string() + ".manifest"), manifest_text(model));
  io::write_file(std::filesystem::path(base.string() + ".blob"), blob_bytes(model));
}

ModelGraph load_model(const std::filesystem::path& base_path) {
  const auto base = model_base(base_path);
  return parse_model(io::read_file(std::filesystem::path(base.string() + ".manifest")),
                     io::read_file(std::filesystem::path(base.string() + ".blob")));
}

}  // namespace bnrect
