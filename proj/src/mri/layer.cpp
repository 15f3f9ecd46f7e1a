#include <fstream>
#include <memory>

#include "groupcdl/mri/mri.hpp"

namespace gcdl {

ad::Var groupcdl_mri_forward(ad::Tape& tape, const ParamVars& vars, const GroupCdlParams<Complex>& params,
                             const Kspace& y, Real sigma_hat, const MriSystem& sys, bool blind) {
  sys.validate();
  require(params.hyper.channels == 1, "groupcdl_mri_forward: the model must be single-channel");
  ForwardOptions opt;
  opt.sigma = sigma_hat;
  opt.blind = blind;
  // the closure runs again during backward, possibly after `sys` is gone
  opt.gram = [s = std::make_shared<const MriSystem>(sys)](std::span<const Real> in, std::span<Real> out) {
    const auto src = as_complex(in);
    ComplexImage x(s->n1, s->n2, 1, std::vector<Complex>(src.begin(), src.end()));
    const auto g = gram_op(x, *s);
    std::copy(g.vec().begin(), g.vec().end(), as_complex(out).begin());
  };
  return groupcdl_forward(tape, vars, params, zero_filled(y, sys), opt);
}

ComplexImage groupcdl_mri_apply(const GroupCdlParams<Complex>& params, const Kspace& y, Real sigma_hat,
                                const MriSystem& sys, bool blind) {
  ad::Tape tape;
  const auto vars = bind_params(tape, params, false);
  const auto out = groupcdl_mri_forward(tape, vars, params, y, sigma_hat, sys, blind);
  const auto v = as_complex(std::span<const Real>(tape.value(out)));
  return ComplexImage(sys.n1, sys.n2, 1, std::vector<Complex>(v.begin(), v.end()));
}

void write_cksp(const std::filesystem::path& path, const Kspace& y, const std::vector<std::uint8_t>& mask,
                ScalarKind kind) {
  require(scalar_kind_is_complex(kind), "write_cksp: k-space needs a complex scalar kind");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  binio::write_magic(os, "CKSP");
  binio::write_u32(os, y.rows());
  binio::write_u32(os, y.cols());
  binio::write_u32(os, y.channels());
  binio::write_u32(os, static_cast<std::uint32_t>(kind));
  binio::write_payload(os, as_real(y.data()), kind);
  if (!mask.empty()) {
    binio::write_magic(os, "MASK");
    binio::write_u32(os, static_cast<std::uint32_t>(mask.size()));
    os.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
  }
}

KspaceFile read_cksp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path.string());
  binio::expect_magic(is, "CKSP");
  const auto n1 = binio::read_u32(is), n2 = binio::read_u32(is), c = binio::read_u32(is);
  const auto code = binio::read_u32(is);
  require(code == 3 || code == 4, "CKSP: payload must be complex64 or complex128");
  require(n1 >= 1 && n2 >= 1 && c >= 1, "CKSP: non-positive dimensions");
  const std::size_t count = static_cast<std::size_t>(n1) * n2 * c;
  const auto body = binio::read_payload(is, count, static_cast<ScalarKind>(code));
  KspaceFile f;
  f.data = Kspace(static_cast<int>(n1), static_cast<int>(n2), static_cast<int>(c));
  for (std::size_t i = 0; i < count; ++i) f.data.vec()[i] = Complex(body[2 * i], body[2 * i + 1]);
  if (is.peek() != std::char_traits<char>::eof()) {
    binio::expect_magic(is, "MASK");
    const auto len = binio::read_u32(is);
    f.mask.resize(len);
    is.read(reinterpret_cast<char*>(f.mask.data()), len);
    if (!is) throw ValidationError("CKSP: truncated mask chunk");
    for (auto m : f.mask) require(m <= 1, "CKSP: mask entries must be 0 or 1");
  }
  return f;
}

}  // namespace gcdl
