#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchgen/netpbm.hpp"
#include "sketchgen/synth.hpp"

namespace sketchgen {

// On-disk dataset layout: one directory per class holding PPM images and
// PGM sketches (dark strokes on a light page), plus manifest.json at the
// root recording ids, labels, poses, file names, and the train/test split.

inline Img invert(const Img& img) {
  Img out = img;
  for (auto& v : out.v) v = 1.0f - v;
  return out;
}

inline void write_dataset(const std::string& dir,
                          const std::vector<SketchSample>& samples,
                          const DatasetSplit& split) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    const std::string cls_dir = "class_" + std::to_string(s.label);
    fs::create_directories(fs::path(dir) / cls_dir);
    const std::string img_rel =
        cls_dir + "/img_" + std::to_string(s.sample_id) + ".ppm";
    write_ppm((fs::path(dir) / img_rel).string(), s.image);
    nlohmann::ordered_json sketches = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < s.sketches.size(); ++k) {
      const std::string sk_rel = cls_dir + "/sk_" +
                                 std::to_string(s.sample_id) + "_" +
                                 std::to_string(k) + ".pgm";
      write_pgm((fs::path(dir) / sk_rel).string(), invert(s.sketches[k]));
      sketches.push_back(sk_rel);
    }
    manifest["samples"].push_back(
        {{"id", s.sample_id},
         {"label", s.label},
         {"image", img_rel},
         {"sketches", sketches},
         {"pose",
          {{"x", s.pose.x},
           {"y", s.pose.y},
           {"scale", s.pose.scale},
           {"rot", s.pose.rot}}}});
  }
  manifest["split"] = {{"train", split.train_ids}, {"test", split.test_ids}};
  std::ofstream f(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!f) throw IoError("write_dataset: cannot open manifest in " + dir);
  f << manifest.dump(2) << "\n";
}

struct LoadedDataset {
  std::vector<SketchSample> samples;
  DatasetSplit split;
};

inline LoadedDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream f(manifest_path, std::ios::binary);
  if (!f)
    throw IoError("load_dataset: cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    f >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_dataset: bad manifest: " + std::string(e.what()));
  }
  LoadedDataset out;
  for (const auto& e : manifest.at("samples")) {
    SketchSample s;
    s.sample_id = e.at("id").get<int>();
    s.label = e.at("label").get<int>();
    s.pose.x = e.at("pose").at("x").get<double>();
    s.pose.y = e.at("pose").at("y").get<double>();
    s.pose.scale = e.at("pose").at("scale").get<double>();
    s.pose.rot = e.at("pose").at("rot").get<double>();
    s.image = read_pnm((fs::path(dir) / e.at("image").get<std::string>())
                           .string());
    for (const auto& rel : e.at("sketches"))
      s.sketches.push_back(
          invert(read_pnm((fs::path(dir) / rel.get<std::string>()).string())));
    out.samples.push_back(std::move(s));
  }
  // samples indexed by id everywhere downstream
  std::sort(out.samples.begin(), out.samples.end(),
            [](const auto& a, const auto& b) {
              return a.sample_id < b.sample_id;
            });
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    if (out.samples[i].sample_id != int(i))
      throw IoError("load_dataset: sample ids are not dense");
  out.split.train_ids =
      manifest.at("split").at("train").get<std::vector<int>>();
  out.split.test_ids = manifest.at("split").at("test").get<std::vector<int>>();
  return out;
}

}  // namespace sketchgen
