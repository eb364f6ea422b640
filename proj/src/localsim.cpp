#include "treefed/localsim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace treefed {

namespace {

constexpr std::size_t kF = ToyModel::kFeatures;
constexpr std::size_t kH = ToyModel::kHidden;
constexpr std::size_t kC = kNumClasses;

constexpr std::size_t kConvLen = kH * kF + kH;
constexpr std::size_t kHiddenLen = kH * kH + kH;
constexpr std::size_t kHeadLen = kC * kH + kC;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Nested-ellipse phantom: label 2 (cup) inside label 1 (disc).
Mask draw_mask(std::size_t size, double eccentricity, Rng& rng) {
  Mask mask = Mask::zeros(size, size);
  const double s = static_cast<double>(size);
  const double cx = s * rng.uniform(0.42, 0.58);
  const double cy = s * rng.uniform(0.42, 0.58);
  const double a = s * rng.uniform(0.22, 0.30);
  const double b = a * (1.0 - 0.6 * std::clamp(eccentricity, 0.0, 1.0));
  const double angle = rng.uniform(0.0, M_PI);
  const double cup_scale = rng.uniform(0.42, 0.58);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = (static_cast<double>(x) + 0.5) - cx;
      const double dy = (static_cast<double>(y) + 0.5) - cy;
      const double u = (dx * ca + dy * sa) / a;
      const double v = (-dx * sa + dy * ca) / b;
      const double r2 = u * u + v * v;
      if (r2 <= cup_scale * cup_scale) {
        mask.at(y, x) = kCup;
      } else if (r2 <= 1.0) {
        mask.at(y, x) = kDisc;
      }
    }
  }
  return mask;
}

double base_intensity(std::uint8_t label) {
  switch (label) {
    case kCup: return 0.85;
    case kDisc: return 0.55;
    default: return 0.20;
  }
}

}  // namespace

std::vector<SegSample> generate_domain(const DomainSpec& spec) {
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(spec.domain_id)));
  std::vector<SegSample> samples;
  samples.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    SegSample sample;
    sample.mask = draw_mask(spec.image_size, spec.shape_eccentricity, rng);
    sample.image = Image::zeros(1, spec.image_size, spec.image_size);
    for (std::size_t y = 0; y < spec.image_size; ++y) {
      for (std::size_t x = 0; x < spec.image_size; ++x) {
        const double base = base_intensity(sample.mask.at(y, x));
        double v = spec.contrast_gain * std::pow(base, spec.gamma) +
                   spec.brightness_shift;
        if (spec.noise_std > 0.0) v += rng.normal(0.0, spec.noise_std);
        sample.image.at(0, y, x) = clamp01(v);
      }
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

ToyModel make_toy_model() {
  ToyModel model;
  model.params = make_params(
      {{"conv", kConvLen}, {"hidden", kHiddenLen}, {"head", kHeadLen}});
  return model;
}

ToyModel init_toy_model(Rng& rng, double scale) {
  ToyModel model = make_toy_model();
  for (double& v : model.params.values) v = scale * rng.normal();
  return model;
}

namespace {

// Handcrafted per-pixel features; borders clamp to the grid.
void pixel_features(const Image& img, std::size_t y, std::size_t x,
                    double* out) {
  const std::size_t h = img.height, w = img.width;
  auto px = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) {
    yy = std::clamp<std::ptrdiff_t>(yy, 0, static_cast<std::ptrdiff_t>(h) - 1);
    xx = std::clamp<std::ptrdiff_t>(xx, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return img.at(0, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
  };
  const auto yi = static_cast<std::ptrdiff_t>(y);
  const auto xi = static_cast<std::ptrdiff_t>(x);
  double local = 0.0;
  for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
    for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
      local += px(yi + dy, xi + dx);
    }
  }
  const double cy = 0.5 * static_cast<double>(h - 1);
  const double cx = 0.5 * static_cast<double>(w - 1);
  const double ry = static_cast<double>(y) - cy;
  const double rx = static_cast<double>(x) - cx;
  const double rmax = std::sqrt(cy * cy + cx * cx);
  out[0] = img.at(0, y, x);
  out[1] = local / 9.0;
  out[2] = 0.5 * (px(yi, xi + 1) - px(yi, xi - 1));
  out[3] = 0.5 * (px(yi + 1, xi) - px(yi - 1, xi));
  out[4] = rmax > 0.0 ? std::sqrt(ry * ry + rx * rx) / rmax : 0.0;
}

struct Weights {
  const double* conv_w;
  const double* conv_b;
  const double* hid_w;
  const double* hid_b;
  const double* head_w;
  const double* head_b;
};

Weights view(const FlatParams& p) {
  Weights w{};
  auto conv = p.layer("conv");
  auto hid = p.layer("hidden");
  auto head = p.layer("head");
  w.conv_w = conv.data();
  w.conv_b = conv.data() + kH * kF;
  w.hid_w = hid.data();
  w.hid_b = hid.data() + kH * kH;
  w.head_w = head.data();
  w.head_b = head.data() + kC * kH;
  return w;
}

void forward_pixel(const Weights& w, const double* z, double* a1, double* a2,
                   double* scores) {
  for (std::size_t k = 0; k < kH; ++k) {
    double u = w.conv_b[k];
    for (std::size_t f = 0; f < kF; ++f) u += w.conv_w[k * kF + f] * z[f];
    a1[k] = std::tanh(u);
  }
  for (std::size_t k = 0; k < kH; ++k) {
    double u = w.hid_b[k];
    for (std::size_t j = 0; j < kH; ++j) u += w.hid_w[k * kH + j] * a1[j];
    a2[k] = std::tanh(u);
  }
  for (std::size_t c = 0; c < kC; ++c) {
    double u = w.head_b[c];
    for (std::size_t j = 0; j < kH; ++j) u += w.head_w[c * kH + j] * a2[j];
    scores[c] = u;
  }
}

void softmax(const double* scores, double* p) {
  double m = std::max({scores[0], scores[1], scores[2]});
  double sum = 0.0;
  for (std::size_t c = 0; c < kC; ++c) {
    p[c] = std::exp(scores[c] - m);
    sum += p[c];
  }
  for (std::size_t c = 0; c < kC; ++c) p[c] /= sum;
}

}  // namespace

Image forward(const ToyModel& model, const Image& image) {
  Weights w = view(model.params);
  Image out = Image::zeros(kC, image.height, image.width);
  double z[kF], a1[kH], a2[kH], scores[kC];
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      pixel_features(image, y, x, z);
      forward_pixel(w, z, a1, a2, scores);
      for (std::size_t c = 0; c < kC; ++c) out.at(c, y, x) = scores[c];
    }
  }
  return out;
}

Mask predict(const ToyModel& model, const Image& image) {
  Image scores = forward(model, image);
  Mask mask = Mask::zeros(image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < kC; ++c) {
        if (scores.at(c, y, x) > scores.at(best, y, x)) best = c;
      }
      mask.at(y, x) = static_cast<std::uint8_t>(best);
    }
  }
  return mask;
}

double loss_and_grad(const ToyModel& model, const Batch& images,
                     const std::vector<const Mask*>& masks, FlatParams& grad) {
  if (images.empty()) {
    throw Error(ErrorCode::EmptyBatch, "loss_and_grad: empty batch");
  }
  Weights w = view(model.params);
  grad = make_params(
      {{"conv", kConvLen}, {"hidden", kHiddenLen}, {"head", kHeadLen}});
  auto gconv = grad.layer("conv");
  auto ghid = grad.layer("hidden");
  auto ghead = grad.layer("head");
  double* gcw = gconv.data();
  double* gcb = gconv.data() + kH * kF;
  double* ghw = ghid.data();
  double* ghb = ghid.data() + kH * kH;
  double* gow = ghead.data();
  double* gob = ghead.data() + kC * kH;

  std::size_t n_pixels = 0;
  for (const auto& img : images) n_pixels += img.height * img.width;
  const double inv_n = 1.0 / static_cast<double>(n_pixels);

  double loss = 0.0;
  double z[kF], a1[kH], a2[kH], scores[kC], p[kC];
  double ds[kC], da2[kH], du2[kH], da1[kH], du1[kH];
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    const Mask& mask = *masks[i];
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        pixel_features(img, y, x, z);
        forward_pixel(w, z, a1, a2, scores);
        softmax(scores, p);
        const std::size_t label = mask.at(y, x);
        loss -= std::log(std::max(p[label], 1e-300)) * inv_n;
        for (std::size_t c = 0; c < kC; ++c) {
          ds[c] = (p[c] - (c == label ? 1.0 : 0.0)) * inv_n;
        }
        for (std::size_t c = 0; c < kC; ++c) {
          gob[c] += ds[c];
          for (std::size_t j = 0; j < kH; ++j) gow[c * kH + j] += ds[c] * a2[j];
        }
        for (std::size_t j = 0; j < kH; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < kC; ++c) acc += w.head_w[c * kH + j] * ds[c];
          da2[j] = acc;
          du2[j] = acc * (1.0 - a2[j] * a2[j]);
        }
        for (std::size_t k = 0; k < kH; ++k) {
          ghb[k] += du2[k];
          for (std::size_t j = 0; j < kH; ++j) ghw[k * kH + j] += du2[k] * a1[j];
        }
        for (std::size_t j = 0; j < kH; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < kH; ++k) acc += w.hid_w[k * kH + j] * du2[k];
          da1[j] = acc;
          du1[j] = acc * (1.0 - a1[j] * a1[j]);
        }
        for (std::size_t k = 0; k < kH; ++k) {
          gcb[k] += du1[k];
          for (std::size_t f = 0; f < kF; ++f) gcw[k * kF + f] += du1[k] * z[f];
        }
      }
    }
  }
  return loss;
}

double cross_entropy(const ToyModel& model,
                     const std::vector<SegSample>& data) {
  Batch images;
  std::vector<const Mask*> masks;
  for (const auto& s : data) {
    images.push_back(s.image);
    masks.push_back(&s.mask);
  }
  FlatParams grad;
  // per-batch loss is already a mean over pixels of the whole batch
  return loss_and_grad(model, images, masks, grad);
}

ToyModel train_local(ToyModel model, const std::vector<SegSample>& data,
                     int epochs, double lr, std::size_t batch_size,
                     const MixerHook* mixer, Rng& rng) {
  if (data.empty()) {
    throw Error(ErrorCode::EmptyInput, "train_local: no data");
  }
  if (batch_size == 0) batch_size = data.size();
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates with the client's own stream
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(start + batch_size, order.size());
      Batch images;
      std::vector<const Mask*> masks;
      for (std::size_t i = start; i < end; ++i) {
        images.push_back(data[order[i]].image);
        masks.push_back(&data[order[i]].mask);
      }
      if (mixer != nullptr) images = (*mixer)(images);
      FlatParams grad;
      loss_and_grad(model, images, masks, grad);
      for (std::size_t i = 0; i < model.params.values.size(); ++i) {
        model.params.values[i] -= lr * grad.values[i];
      }
    }
  }
  model.params.sample_count = data.size();
  return model;
}

void write_pgm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double v = std::clamp(image.at(0, y, x), 0.0, 1.0);
      out.put(static_cast<char>(std::lround(v * 255.0)));
    }
  }
}

void write_mask_pgm(const std::string& path, const Mask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  out << "P5\n" << mask.width << " " << mask.height << "\n" << 2 << "\n";
  for (std::uint8_t v : mask.data) out.put(static_cast<char>(v));
}

namespace {

void read_pgm_header(std::ifstream& in, const std::string& path,
                     std::size_t& w, std::size_t& h, int& maxval) {
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error(ErrorCode::IoError, path + ": not a P5 PGM");
  in >> w >> h >> maxval;
  in.get();  // single whitespace after maxval
  if (!in) throw Error(ErrorCode::IoError, path + ": bad PGM header");
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::size_t w = 0, h = 0;
  int maxval = 255;
  read_pgm_header(in, path, w, h, maxval);
  Image img = Image::zeros(1, h, w);
  for (double& v : img.data) {
    int byte = in.get();
    if (byte < 0) throw Error(ErrorCode::IoError, path + ": truncated PGM");
    v = static_cast<double>(byte) / static_cast<double>(maxval);
  }
  return img;
}

Mask read_mask_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::size_t w = 0, h = 0;
  int maxval = 2;
  read_pgm_header(in, path, w, h, maxval);
  Mask mask = Mask::zeros(h, w);
  for (std::uint8_t& v : mask.data) {
    int byte = in.get();
    if (byte < 0) throw Error(ErrorCode::IoError, path + ": truncated PGM");
    v = static_cast<std::uint8_t>(byte);
  }
  return mask;
}

void export_dataset(const std::string& dir,
                    const std::vector<DomainSpec>& specs,
                    const std::vector<std::vector<SegSample>>& domains) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw Error(ErrorCode::IoError, "cannot write manifest");
  for (std::size_t d = 0; d < specs.size(); ++d) {
    const DomainSpec& spec = specs[d];
    manifest << "domain " << spec.domain_id
             << " brightness_shift=" << spec.brightness_shift
             << " contrast_gain=" << spec.contrast_gain
             << " gamma=" << spec.gamma << " noise_std=" << spec.noise_std
             << " shape_eccentricity=" << spec.shape_eccentricity
             << " n_samples=" << domains[d].size()
             << " image_size=" << spec.image_size << " seed=" << spec.seed
             << "\n";
    for (std::size_t i = 0; i < domains[d].size(); ++i) {
      std::ostringstream stem;
      stem << "d" << spec.domain_id << "_" << i;
      write_pgm((fs::path(dir) / (stem.str() + "_img.pgm")).string(),
                domains[d][i].image);
      write_mask_pgm((fs::path(dir) / (stem.str() + "_mask.pgm")).string(),
                     domains[d][i].mask);
    }
  }
}

std::pair<std::vector<DomainSpec>, std::vector<std::vector<SegSample>>>
import_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw Error(ErrorCode::IoError, "cannot read manifest in " + dir);
  std::vector<DomainSpec> specs;
  std::vector<std::vector<SegSample>> domains;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    DomainSpec spec;
    ls >> word >> spec.domain_id;
    if (word != "domain") {
      throw Error(ErrorCode::IoError, "bad manifest line: " + line);
    }
    while (ls >> word) {
      auto eq = word.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = word.substr(0, eq);
      const std::string val = word.substr(eq + 1);
      if (key == "brightness_shift") spec.brightness_shift = std::stod(val);
      else if (key == "contrast_gain") spec.contrast_gain = std::stod(val);
      else if (key == "gamma") spec.gamma = std::stod(val);
      else if (key == "noise_std") spec.noise_std = std::stod(val);
      else if (key == "shape_eccentricity") spec.shape_eccentricity = std::stod(val);
      else if (key == "n_samples") spec.n_samples = std::stoul(val);
      else if (key == "image_size") spec.image_size = std::stoul(val);
      else if (key == "seed") spec.seed = std::stoull(val);
    }
    std::vector<SegSample> samples;
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
      std::ostringstream stem;
      stem << "d" << spec.domain_id << "_" << i;
      SegSample s;
      s.image = read_pgm((fs::path(dir) / (stem.str() + "_img.pgm")).string());
      s.mask = read_mask_pgm((fs::path(dir) / (stem.str() + "_mask.pgm")).string());
      samples.push_back(std::move(s));
    }
    specs.push_back(spec);
    domains.push_back(std::move(samples));
  }
  return {specs, domains};
}

}  // namespace treefed
