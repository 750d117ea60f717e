#pragma once

#include "kyfan/oracle.hpp"
#include "kyfan/problem_io.hpp"

namespace kyfan::io {

// Doubles go out as JSON numbers; infinities as "+inf"/"-inf", NaN as null.
ordered_json number(double v);
ordered_json extended(const ExtendedReal<double>& v);
ordered_json index_list(Range r);

ordered_json problem_echo(const Problem& p);
ordered_json certificate_summary(const SubgradCertificate<double>& cert);
ordered_json index_sets(const SubgradCertificate<double>& cert);
ordered_json upsilon_summary(const UpsilonSpec<double>& ups);
ordered_json verdict_json(const TiltVerdict<double>& v, Index n, Index m, const Tolerances& tols);
ordered_json second_subderiv_json(const SecondSubderivValue<double>& v);
ordered_json probe_json(const ProbeReport& r, const ProbeConfig& cfg);

}  // namespace kyfan::io
