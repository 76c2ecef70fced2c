//! Frozen 25-point normal-CDF reference (50-digit arithmetic, generated by
//! an arbitrary-precision oracle before the library was built).

pub const NORMAL_CDF_TABLE: [(f64, f64); 25] = [
    (0.00, 0.50000000000000000),
    (0.10, 0.53982783727702898),
    (-0.10, 0.46017216272297102),
    (0.50, 0.69146246127401310),
    (-0.50, 0.30853753872598690),
    (1.00, 0.84134474606854295),
    (-1.00, 0.15865525393145705),
    (1.50, 0.93319279873114193),
    (-1.50, 0.066807201268858066),
    (1.96, 0.97500210485177956),
    (-1.96, 0.024997895148220436),
    (2.00, 0.97724986805182079),
    (-2.00, 0.022750131948179207),
    (2.50, 0.99379033467422386),
    (-2.50, 0.0062096653257761352),
    (3.00, 0.99865010196836991),
    (-3.00, 0.0013498980316300945),
    (4.00, 0.99996832875816688),
    (-4.00, 3.1671241833119921e-5),
    (5.00, 0.99999971334842812),
    (-5.00, 2.8665157187919391e-7),
    (6.00, 0.99999999901341235),
    (-6.00, 9.8658764503769814e-10),
    (8.00, 0.99999999999999938),
    (-8.00, 6.2209605742717841e-16),
];
