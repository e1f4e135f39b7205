#include "cfpm/color_space.hpp"

namespace cfpm::color {

namespace {

// CIE 1931 2-degree observer (x-bar, y-bar, z-bar), 380-780 nm in 5 nm steps.
const double kCie1931[][3] = {
    {1.368000e-03, 3.900000e-05, 6.450001e-03},  // 380
    {2.236000e-03, 6.400000e-05, 1.054999e-02},  // 385
    {4.243000e-03, 1.200000e-04, 2.005001e-02},  // 390
    {7.650000e-03, 2.170000e-04, 3.621000e-02},  // 395
    {1.431000e-02, 3.960000e-04, 6.785001e-02},  // 400
    {2.319000e-02, 6.400000e-04, 1.102000e-01},  // 405
    {4.351000e-02, 1.210000e-03, 2.074000e-01},  // 410
    {7.763000e-02, 2.180000e-03, 3.713000e-01},  // 415
    {1.343800e-01, 4.000000e-03, 6.456000e-01},  // 420
    {2.147700e-01, 7.300000e-03, 1.039050e+00},  // 425
    {2.839000e-01, 1.160000e-02, 1.385600e+00},  // 430
    {3.285000e-01, 1.684000e-02, 1.622960e+00},  // 435
    {3.482800e-01, 2.300000e-02, 1.747060e+00},  // 440
    {3.480600e-01, 2.980000e-02, 1.782600e+00},  // 445
    {3.362000e-01, 3.800000e-02, 1.772110e+00},  // 450
    {3.187000e-01, 4.800000e-02, 1.744100e+00},  // 455
    {2.908000e-01, 6.000000e-02, 1.669200e+00},  // 460
    {2.511000e-01, 7.390000e-02, 1.528100e+00},  // 465
    {1.953600e-01, 9.098000e-02, 1.287640e+00},  // 470
    {1.421000e-01, 1.126000e-01, 1.041900e+00},  // 475
    {9.564000e-02, 1.390200e-01, 8.129501e-01},  // 480
    {5.795001e-02, 1.693000e-01, 6.162000e-01},  // 485
    {3.201000e-02, 2.080200e-01, 4.651800e-01},  // 490
    {1.470000e-02, 2.586000e-01, 3.533000e-01},  // 495
    {4.900000e-03, 3.230000e-01, 2.720000e-01},  // 500
    {2.400000e-03, 4.073000e-01, 2.123000e-01},  // 505
    {9.300000e-03, 5.030000e-01, 1.582000e-01},  // 510
    {2.910000e-02, 6.082000e-01, 1.117000e-01},  // 515
    {6.327000e-02, 7.100000e-01, 7.824999e-02},  // 520
    {1.096000e-01, 7.932000e-01, 5.725001e-02},  // 525
    {1.655000e-01, 8.620000e-01, 4.216000e-02},  // 530
    {2.257499e-01, 9.148501e-01, 2.984000e-02},  // 535
    {2.904000e-01, 9.540000e-01, 2.030000e-02},  // 540
    {3.597000e-01, 9.803000e-01, 1.340000e-02},  // 545
    {4.334499e-01, 9.949501e-01, 8.749999e-03},  // 550
    {5.120501e-01, 1.000000e+00, 5.749999e-03},  // 555
    {5.945000e-01, 9.950000e-01, 3.900000e-03},  // 560
    {6.784000e-01, 9.786000e-01, 2.749999e-03},  // 565
    {7.621000e-01, 9.520000e-01, 2.100000e-03},  // 570
    {8.425000e-01, 9.154000e-01, 1.800000e-03},  // 575
    {9.163000e-01, 8.700000e-01, 1.650001e-03},  // 580
    {9.786000e-01, 8.163000e-01, 1.400000e-03},  // 585
    {1.026300e+00, 7.570000e-01, 1.100000e-03},  // 590
    {1.056700e+00, 6.949000e-01, 1.000000e-03},  // 595
    {1.062200e+00, 6.310000e-01, 8.000000e-04},  // 600
    {1.045600e+00, 5.668000e-01, 6.000000e-04},  // 605
    {1.002600e+00, 5.030000e-01, 3.400000e-04},  // 610
    {9.384000e-01, 4.412000e-01, 2.400000e-04},  // 615
    {8.544499e-01, 3.810000e-01, 1.900000e-04},  // 620
    {7.514000e-01, 3.210000e-01, 1.000000e-04},  // 625
    {6.424000e-01, 2.650000e-01, 4.999999e-05},  // 630
    {5.419000e-01, 2.170000e-01, 3.000000e-05},  // 635
    {4.479000e-01, 1.750000e-01, 2.000000e-05},  // 640
    {3.608000e-01, 1.382000e-01, 1.000000e-05},  // 645
    {2.835000e-01, 1.070000e-01, 0.000000e+00},  // 650
    {2.187000e-01, 8.160000e-02, 0.000000e+00},  // 655
    {1.649000e-01, 6.100000e-02, 0.000000e+00},  // 660
    {1.212000e-01, 4.458000e-02, 0.000000e+00},  // 665
    {8.740000e-02, 3.200000e-02, 0.000000e+00},  // 670
    {6.360000e-02, 2.320000e-02, 0.000000e+00},  // 675
    {4.677000e-02, 1.700000e-02, 0.000000e+00},  // 680
    {3.290000e-02, 1.192000e-02, 0.000000e+00},  // 685
    {2.270000e-02, 8.210000e-03, 0.000000e+00},  // 690
    {1.584000e-02, 5.723000e-03, 0.000000e+00},  // 695
    {1.135916e-02, 4.102000e-03, 0.000000e+00},  // 700
    {8.110916e-03, 2.929000e-03, 0.000000e+00},  // 705
    {5.790346e-03, 2.091000e-03, 0.000000e+00},  // 710
    {4.109457e-03, 1.484000e-03, 0.000000e+00},  // 715
    {2.899327e-03, 1.047000e-03, 0.000000e+00},  // 720
    {2.049190e-03, 7.400000e-04, 0.000000e+00},  // 725
    {1.439971e-03, 5.200000e-04, 0.000000e+00},  // 730
    {9.999493e-04, 3.611000e-04, 0.000000e+00},  // 735
    {6.900786e-04, 2.492000e-04, 0.000000e+00},  // 740
    {4.760213e-04, 1.719000e-04, 0.000000e+00},  // 745
    {3.323011e-04, 1.200000e-04, 0.000000e+00},  // 750
    {2.348261e-04, 8.480000e-05, 0.000000e+00},  // 755
    {1.661505e-04, 6.000000e-05, 0.000000e+00},  // 760
    {1.174130e-04, 4.240000e-05, 0.000000e+00},  // 765
    {8.307527e-05, 3.000000e-05, 0.000000e+00},  // 770
    {5.870652e-05, 2.120000e-05, 0.000000e+00},  // 775
    {4.150994e-05, 1.499000e-05, 0.000000e+00},  // 780
};

}  // namespace

const CmfTable& CmfTable::cie1931() {
  static const CmfTable table = [] {
    CmfTable t;
    t.start_nm = 380.0;
    t.step_nm = 5.0;
    t.basis = CmfBasis::XYZ;
    for (const auto& row : kCie1931) t.samples.emplace_back(row[0], row[1], row[2]);
    return t;
  }();
  return table;
}

}  // namespace cfpm::color
