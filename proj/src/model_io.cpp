#include "oupm/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace oupm {

using nlohmann::json;

std::string model_to_string(const Model& model) {
  const auto& p = model.params;
  const auto& s = model.stats;
  json body;
  body["format_version"] = kModelFormatVersion;
  body["d"] = p.channels();
  body["channel_names"] = model.channel_names;
  body["params"] = {{"a", p.a},
                    {"b", p.b},
                    {"c", p.c},
                    {"d_off", p.d_off},
                    {"lambda_raw", p.lambda_raw}};
  body["preprocess"] = {{"target_scale", s.target_scale},
                        {"input_means", s.input_means},
                        {"input_stds", s.input_stds},
                        {"constant_channel", s.constant_channel},
                        {"zero_floor", s.zero_floor}};
  std::ostringstream out;
  out << kModelMagic << " v" << kModelFormatVersion << '\n' << body.dump(2) << '\n';
  return out.str();
}

Model model_from_string(const std::string& text) {
  const auto eol = text.find('\n');
  const std::string header = text.substr(0, eol);
  const std::string expected = std::string(kModelMagic) + " v" + std::to_string(kModelFormatVersion);
  if (header != expected)
    throw DataError("model file: bad header '" + header + "', expected '" + expected + "'");

  json body;
  try {
    body = json::parse(text.substr(eol == std::string::npos ? text.size() : eol + 1));
    if (body.at("format_version").get<int>() != kModelFormatVersion)
      throw DataError("model file: unsupported format_version");
    const auto d = body.at("d").get<std::size_t>();

    Model m;
    m.channel_names = body.at("channel_names").get<std::vector<std::string>>();
    const auto& jp = body.at("params");
    m.params = ModelParams(d);
    m.params.a = jp.at("a").get<std::vector<double>>();
    m.params.b = jp.at("b").get<double>();
    m.params.c = jp.at("c").get<std::vector<double>>();
    m.params.d_off = jp.at("d_off").get<double>();
    m.params.lambda_raw = jp.at("lambda_raw").get<double>();

    const auto& js = body.at("preprocess");
    m.stats.target_scale = js.at("target_scale").get<double>();
    m.stats.input_means = js.at("input_means").get<std::vector<double>>();
    m.stats.input_stds = js.at("input_stds").get<std::vector<double>>();
    m.stats.constant_channel = js.at("constant_channel").get<std::vector<bool>>();
    m.stats.zero_floor = js.at("zero_floor").get<double>();

    if (m.channel_names.size() != d || m.params.a.size() != d || m.params.c.size() != d ||
        m.stats.input_means.size() != d || m.stats.input_stds.size() != d ||
        m.stats.constant_channel.size() != d)
      throw DataError("model file: array lengths disagree with d");
    if (!(m.stats.target_scale > 0.0)) throw DataError("model file: target_scale must be > 0");
    for (double s : m.stats.input_stds)
      if (!(s > 0.0)) throw DataError("model file: input_stds must be > 0");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << model_to_string(model);
  if (!out) throw Error("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_string(ss.str());
}

}  // namespace oupm
